"""Shared fixtures and the acceptance-criteria summary.

Tests tagged ``@pytest.mark.acceptance(n, "title")`` are grouped by criterion
number; after the run one PASS/FAIL line is printed per criterion.  A criterion
passes only when every test tagged with it passed.
"""
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_criteria: dict[int, dict] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            num, title = m.args
            entry = _criteria.setdefault(num, {"title": title, "tests": {}})
            entry["tests"][item.nodeid] = None


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid in entry["tests"]:
            prev = entry["tests"][report.nodeid]
            if report.failed:
                entry["tests"][report.nodeid] = "failed"
            elif report.when == "call" and prev is None:
                entry["tests"][report.nodeid] = "skipped" if report.skipped else "passed"
            elif report.skipped and prev is None:
                entry["tests"][report.nodeid] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        entry = _criteria[num]
        states = list(entry["tests"].values())
        ok = bool(states) and all(s == "passed" for s in states)
        n_ok = sum(s == "passed" for s in states)
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if ok else 'FAIL'}  {entry['title']}  ({n_ok}/{len(states)} checks)")
