"""Command-line front end: config parsing, seeded campaigns, reports.

Subcommands::

    ghzqkd run <config> [--seed S] [--out PATH] [--format json|csv] [--transcript PATH] [--jobs N]
    ghzqkd table [--json]
    ghzqkd verify-eqs
    ghzqkd attack-sweep <config> --grid a:b:n [--out PATH]
    ghzqkd verify-report <transcript> --report <report>

Exit codes: 0 accepted, 2 at least one session aborted on the parity
check, 1 usage, configuration or I/O error, or a verify-report mismatch.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import ghzcorr
from .postproc import PostprocConfig, final_length
from .protocol import SessionConfig, run_session
from .qcore import Basis
from .threat import (ChannelConfig, EntangleAncilla, UnsupportedAttackError,
                     ancilla_information, attack_model, eve_information, make_strategy,
                     violation_probability, eve_bob_information, eve_alice_information)

REPORT_SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_ABORT = 0, 1, 2
FORMATS = ("json", "csv")


class ConfigError(ValueError):
    """Invalid configuration text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# -- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    session: SessionConfig
    sessions: int = 1
    format: str = "json"
    path: str | None = None
    transcript: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.sessions < 1:
            raise ValueError("session.sessions must be >= 1")
        if self.format not in FORMATS:
            raise ValueError(f"output.format must be one of {FORMATS}")
        if self.jobs < 1:
            raise ValueError("session.jobs must be >= 1")

    def session_config(self, index: int) -> SessionConfig:
        """Seed policy: base seed + session index (mod 2**64)."""
        return replace(self.session, seed=(self.session.seed + index) % 2 ** 64)


def _boolean(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> converter
_SCHEMA = {
    "session": {"n_rounds": int, "test_fraction": float, "qber_abort_threshold": float,
                "bitmap": str, "seed": int, "sessions": int, "jobs": int, "eve": str},
    "channel": {"loss_prob": float, "depolarize_prob": float},
    "eve": {"strategy": str, "x_prob": float, "strength": float, "axis": str},
    "postproc": {"enabled": _boolean, "qber_sample_fraction": float, "n_passes": int,
                 "confirm_rounds": int, "verify_hash_bits": int, "safety_margin": int},
    "output": {"format": str, "path": str, "transcript": str},
}


def _key_lines(text: str) -> dict:
    """(section, key) -> 1-based line number, for error messages."""
    where, section = {}, "session"
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
        elif s and s[0] not in "#;":
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            where.setdefault((section, key), n)
    return where


def parse_config(text: str) -> CampaignConfig:
    """Parse ``key = value`` text with [session] [channel] [eve] [postproc] [output].

    Keys before the first section header belong to [session].
    """
    offset = 0
    first = next((l.strip() for l in text.splitlines() if l.strip() and l.strip()[0] not in "#;"), "")
    if not first.startswith("["):
        text_in, offset = "[session]\n" + text, 1
    else:
        text_in = text
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text_in)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        message = str(exc).splitlines()[0]
        if line is None and getattr(exc, "errors", None):
            line, bad = exc.errors[0]
            message = f"malformed line (expected key = value): {bad.strip()}"
        raise ConfigError(message, None if line is None else line - offset) from None
    lines = _key_lines(text)

    values: dict = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _section_line(text, section))
        for key, raw in parser.items(section):
            line = lines.get((sec, key))
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {sec}.{key}", line)
            try:
                values[(sec, key)] = _SCHEMA[sec][key](raw.strip())
            except ValueError:
                raise ConfigError(f"bad value for {sec}.{key}: {raw.strip()!r}", line) from None

    def get(sec, key, default):
        return values.get((sec, key), default)

    try:
        name = get("eve", "strategy", None)
        alias = get("session", "eve", None)
        if name and alias and name != alias:
            raise ConfigError("session.eve and eve.strategy disagree", lines.get(("session", "eve")))
        name = name or alias or "none"
        eve_params = {k: values[("eve", k)] for k in ("x_prob", "strength", "axis") if ("eve", k) in values}
        eve = make_strategy(name, **eve_params)
        channel = ChannelConfig(get("channel", "loss_prob", 0.0), get("channel", "depolarize_prob", 0.0))
        d = PostprocConfig()
        postproc = PostprocConfig(**{k: get("postproc", k, getattr(d, k)) for k in _SCHEMA["postproc"]})
        s = SessionConfig()
        session = SessionConfig(
            n_rounds=get("session", "n_rounds", s.n_rounds),
            test_fraction=get("session", "test_fraction", s.test_fraction),
            qber_abort_threshold=get("session", "qber_abort_threshold", s.qber_abort_threshold),
            bitmap=get("session", "bitmap", s.bitmap),
            seed=get("session", "seed", s.seed),
            channel=channel, eve=eve, postproc=postproc)
        return CampaignConfig(session=session, sessions=get("session", "sessions", 1),
                              format=get("output", "format", "json"), path=get("output", "path", None),
                              transcript=get("output", "transcript", None),
                              jobs=get("session", "jobs", 1))
    except ConfigError:
        raise
    except (ValueError, UnsupportedAttackError) as exc:
        m = re.match(r"(\w+)\.(\w+)", str(exc))
        line = lines.get((m.group(1), m.group(2))) if m else None
        if m and line is None and m.group(0) == "eve.strategy":
            line = lines.get(("session", "eve"))
        raise ConfigError(str(exc), line) from None


def _section_line(text: str, section: str):
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip().lower() == f"[{section.lower()}]":
            return n
    return None


# -- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class EfficiencyReport:
    """``L`` delivered (usable) rounds, ``l`` lost rounds."""

    L: int
    l: int
    tested_count: int
    violation_rate: float
    qber: float
    final_key_len: int
    kept_key_bits: int
    triplets_consumed: int
    p2_transmitted: int

    @property
    def eta(self) -> float:
        return self.L / (self.L + self.l) if self.L + self.l else 0.0

    @property
    def eta_bb84_baseline(self) -> float:
        return self.L / (2 * (self.L + self.l)) if self.L + self.l else 0.0

    def to_dict(self) -> dict:
        return {"L": self.L, "l": self.l, "eta": self.eta, "eta_bb84_baseline": self.eta_bb84_baseline,
                "tested_count": self.tested_count, "violation_rate": self.violation_rate,
                "qber": self.qber, "final_key_len": self.final_key_len,
                "kept_key_bits": self.kept_key_bits, "triplets_consumed": self.triplets_consumed,
                "p2_transmitted": self.p2_transmitted}


def _accounting(delivered, tested, sacrificed, corrected, final_len, kept) -> dict:
    # a raw key that never entered post-processing (abort, or disabled) is discarded whole
    discarded = kept if sacrificed == 0 else 0
    compressed = corrected - final_len
    return {"delivered": delivered, "tested": tested, "sacrificed": sacrificed, "final": final_len,
            "compressed": compressed, "discarded": discarded,
            "holds": delivered == tested + sacrificed + final_len + compressed + discarded}


def session_summary(index: int, cfg: SessionConfig, stats) -> dict:
    """Per-session report row from a run's counters."""
    return _summary(index, cfg.seed, stats.n_rounds, stats.lost, stats.tested, stats.violations,
                    stats.aborted, stats.sacrificed, stats.sample_mismatches, stats.corrected,
                    stats.recon_leaked, stats.leaked_bits, stats.verify_ok, stats.final_len)


def _summary(index, seed, n_rounds, lost, tested, violations, aborted, sacrificed, mismatches,
             corrected, recon_parities, leaked, verify_ok, final_len) -> dict:
    delivered = n_rounds - lost
    kept = delivered - tested
    return {
        "index": index, "seed": seed, "n_rounds": n_rounds, "lost": lost, "delivered": delivered,
        "tested": tested, "violations": violations,
        "violation_rate": violations / tested if tested else 0.0,
        "aborted": aborted, "kept": kept, "sacrificed": sacrificed,
        "sample_mismatches": mismatches, "qber": mismatches / sacrificed if sacrificed else 0.0,
        "corrected": corrected, "recon_parities": recon_parities, "leaked_bits": leaked,
        "verify_ok": verify_ok, "final_len": final_len,
        "accounting": _accounting(delivered, tested, sacrificed, corrected, final_len, kept),
    }


def aggregate(campaign: CampaignConfig, summaries: list[dict]) -> dict:
    """Campaign report; independent of the order sessions finished in."""
    rows = sorted(summaries, key=lambda s: s["index"])
    tot = {k: sum(r[k] for r in rows) for k in (
        "n_rounds", "lost", "delivered", "tested", "violations", "kept", "sacrificed",
        "sample_mismatches", "final_len")}
    eff = EfficiencyReport(
        L=tot["delivered"], l=tot["lost"], tested_count=tot["tested"],
        violation_rate=tot["violations"] / tot["tested"] if tot["tested"] else 0.0,
        qber=tot["sample_mismatches"] / tot["sacrificed"] if tot["sacrificed"] else 0.0,
        final_key_len=tot["final_len"], kept_key_bits=tot["kept"],
        triplets_consumed=tot["n_rounds"], p2_transmitted=tot["n_rounds"])
    cfg = campaign.session
    attack = eve_information(cfg.eve, cfg.channel).to_dict()
    attack["empirical_detection_rate"] = eff.violation_rate
    n_abort = sum(1 for r in rows if r["aborted"])
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "campaign": {"sessions": campaign.sessions, "config": cfg.describe()},
        "sessions": rows,
        "efficiency": eff.to_dict(),
        "attack": attack,
        "aborted_sessions": n_abort,
        "accounting_ok": all(r["accounting"]["holds"] for r in rows),
        "exit_code": EXIT_ABORT if n_abort else EXIT_OK,
    }


CSV_COLUMNS = ("schema_version", "row", "seed", "n_rounds", "lost", "delivered", "tested",
               "violations", "violation_rate", "aborted", "kept", "sacrificed", "qber",
               "corrected", "leaked_bits", "final_len", "eta", "eta_bb84_baseline", "accounting_ok")


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report["sessions"]:
        eff = EfficiencyReport(r["delivered"], r["lost"], 0, 0.0, 0.0, 0, 0, 0, 0)
        w.writerow([REPORT_SCHEMA_VERSION, r["index"], r["seed"], r["n_rounds"], r["lost"],
                    r["delivered"], r["tested"], r["violations"], repr(r["violation_rate"]),
                    int(r["aborted"]), r["kept"], r["sacrificed"], repr(r["qber"]),
                    r["corrected"], r["leaked_bits"], r["final_len"], repr(eff.eta),
                    repr(eff.eta_bb84_baseline), int(r["accounting"]["holds"])])
    e = report["efficiency"]
    w.writerow([REPORT_SCHEMA_VERSION, "total", "", e["triplets_consumed"], e["l"], e["L"],
                e["tested_count"], sum(r["violations"] for r in report["sessions"]),
                repr(e["violation_rate"]), report["aborted_sessions"], e["kept_key_bits"],
                sum(r["sacrificed"] for r in report["sessions"]), repr(e["qber"]),
                sum(r["corrected"] for r in report["sessions"]),
                sum(r["leaked_bits"] for r in report["sessions"]), e["final_key_len"],
                repr(e["eta"]), repr(e["eta_bb84_baseline"]), int(report["accounting_ok"])])
    return buf.getvalue()


# -- campaign ---------------------------------------------------------------

def _run_one(args):
    campaign, index, want_lines = args
    cfg = campaign.session_config(index)
    res = run_session(cfg, session_index=index)
    lines = list(res.transcript.lines()) if want_lines else None
    return session_summary(index, cfg, res.stats), lines


def run_campaign(campaign: CampaignConfig, jobs: int | None = None):
    """Run every session; returns ``(report, transcript lines or None)``."""
    jobs = jobs or campaign.jobs
    want = campaign.transcript is not None
    tasks = [(campaign, i, want) for i in range(campaign.sessions)]
    if jobs > 1 and campaign.sessions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, campaign.sessions // (4 * jobs))))
    else:
        results = [_run_one(t) for t in tasks]
    report = aggregate(campaign, [s for s, _ in results])
    lines = [l for _, ls in results for l in ls] if want else None
    return report, lines


def cmd_run(campaign: CampaignConfig, jobs: int | None = None, out=None) -> int:
    report, lines = run_campaign(campaign, jobs)
    text = render_report(report, campaign.format)
    if campaign.path:
        with open(campaign.path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        (out or sys.stdout).write(text)
    if lines is not None:
        with open(campaign.transcript, "w", encoding="utf-8") as fh:
            fh.write("".join(l + "\n" for l in lines))
    return report["exit_code"]


# -- verify-report ----------------------------------------------------------

def _expected_sign(bases: str) -> int:
    # <XXX> = +1 and each pair of Y factors flips the sign
    n_y = bases.count("y")
    if n_y % 2:
        raise ValueError(f"basis triple {bases!r} has no deterministic parity")
    return -1 if n_y % 4 == 2 else 1


def _sign(outcome: str) -> int:
    return 1 if outcome == "+" else -1


def report_from_transcript(lines) -> dict:
    """Rebuild the campaign report from serialized transcripts alone."""
    sessions: dict = {}
    for line in lines:
        if not line.strip():
            continue
        rec = json.loads(line)
        sessions.setdefault(rec["session"], []).append(rec)
    if not sessions:
        raise ValueError("empty transcript")
    summaries, header = [], None
    for sid in sorted(sessions):
        recs = sessions[sid]
        head = recs[0]
        if head["tag"] != "session_start":
            raise ValueError(f"session {sid}: missing session_start record")
        header = header or head
        cfg = head["config"]
        alice = {r["round"]: r for r in recs if r["tag"] == "alice_record"}
        announced = {r["round"]: r["basis"] for r in recs if r["tag"] == "basis"}
        tagged = {}
        for r in recs:
            tagged.setdefault(r["tag"], []).append(r)

        lost = len(tagged["loss_report"][0]["rounds"])
        reveals = tagged.get("test_reveal", [])
        bad = 0
        for m in reveals:
            a = alice[m["round"]]
            if announced[m["round"]] != m["basis"]:
                raise ValueError(f"session {sid}: revealed basis differs at round {m['round']}")
            exp = _expected_sign(a["b1"] + m["basis"] + a["b3"])
            bad += _sign(a["o1"]) * _sign(m["outcome"]) * _sign(a["o3"]) != exp
        tested = len(reveals)
        rate = bad / tested if tested else 0.0
        aborted = rate > cfg["qber_abort_threshold"]

        sacrificed = mismatches = corrected = recon = leaked = final_len = 0
        verify_ok = False
        if "qber_sample" in tagged:
            sample = tagged["qber_sample"][0]
            rounds = sample["rounds"]
            sacrificed = len(rounds)
            bob = np.unpackbits(np.frombuffer(bytes.fromhex(sample["bob_bits"]), dtype=np.uint8))[:sacrificed]
            for r, bbit in zip(rounds, bob):
                a = alice[r]
                sign = _expected_sign(a["b1"] + announced[r] + a["b3"]) * _sign(a["o1"]) * _sign(a["o3"])
                bit = 0 if sign == 1 else 1
                if cfg["bitmap"] == "plus_one":
                    bit = 1 - bit
                mismatches += int(bit != int(bbit))
            recon = len(tagged.get("recon", []))
            checks = tagged.get("key_check", [])
            check_bits = checks[0]["n_bits"] if checks else 0
            verify_ok = bool(tagged.get("key_check_result", [{"ok": False}])[0]["ok"])
            leaked = recon + check_bits if checks else 0
            starts = tagged.get("recon_start", [])
            corrected = starts[0]["n_bits"] if starts else 0
            qber = mismatches / sacrificed
            expect = (final_length(corrected, qber, leaked, cfg["postproc"]["safety_margin"])
                      if corrected and verify_ok else 0)
            keys = {r["party"]: r for r in tagged.get("final_key", [])}
            final_len = keys["alice"]["n_bits"] if "alice" in keys else 0
            pa = tagged.get("pa_seed")
            if final_len != expect or (pa and pa[0]["out_len"] != expect):
                raise ValueError(f"session {sid}: final key length {final_len} != recomputed {expect}")
        summaries.append(_summary(sid, cfg["seed"], cfg["n_rounds"], lost, tested, bad, aborted,
                                  sacrificed, mismatches, corrected, recon, leaked, verify_ok,
                                  final_len))
    campaign_cfg = _config_from_description(header["config"], len(summaries))
    return aggregate(campaign_cfg, summaries)


def _config_from_description(d: dict, sessions: int) -> CampaignConfig:
    eve = make_strategy(d["eve"]["strategy"], **{k: v for k, v in d["eve"].items() if k != "strategy"})
    session = SessionConfig(
        n_rounds=d["n_rounds"], test_fraction=d["test_fraction"],
        qber_abort_threshold=d["qber_abort_threshold"], bitmap=d["bitmap"], seed=d["seed"],
        channel=ChannelConfig(**d["channel"]), eve=eve, postproc=PostprocConfig(**d["postproc"]))
    return CampaignConfig(session=session, sessions=sessions)


def cmd_verify_report(transcript_path: str, report_path: str, out=None) -> int:
    out = out or sys.stdout
    with open(transcript_path, encoding="utf-8") as fh:
        rebuilt = report_from_transcript(fh)
    with open(report_path, encoding="utf-8") as fh:
        original = fh.read()
    fmt = "json" if original.lstrip().startswith("{") else "csv"
    ok = render_report(rebuilt, fmt) == original
    out.write("report verified: all numbers recomputed from the transcript agree\n" if ok
              else "report MISMATCH: recomputed numbers differ from the report\n")
    return EXIT_OK if ok else EXIT_ERROR


# -- table / equations / sweep ----------------------------------------------

def table_document() -> dict:
    table = ghzcorr.derive_table()
    decomp = ghzcorr.verify_decompositions()
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "entries": table.to_dict(),
        "table_discrepancies": [d.__dict__ for d in ghzcorr.table_discrepancies(table)],
        "decompositions": decomp.to_dict()["decompositions"],
        "mismatched_decompositions": decomp.mismatched,
    }


def load_schema(name: str) -> dict:
    return json.loads(resources.files("ghzqkd").joinpath("schemas", name).read_text(encoding="utf-8"))


def cmd_table(as_json: bool = False, out=None) -> int:
    out = out or sys.stdout
    doc = table_document()
    if as_json:
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    out.write("P1   P2   -> P3   probability\n")
    for e in doc["entries"]:
        out.write(f"{e['p1']:<4} {e['p2']:<4} -> {e['p3']:<4} {e['probability']:.12f}\n")
    out.write(f"\n{len(doc['table_discrepancies'])} discrepancy(ies) against the printed table:\n")
    for d in doc["table_discrepancies"]:
        out.write(f"  P1={d['p1']} P2={d['p2']}: printed {d['printed']}, derived {d['derived']}\n")
    _write_decomposition_summary(doc, out)
    return EXIT_OK


def _write_decomposition_summary(doc, out) -> None:
    out.write("\nbasis decompositions (printed vs derived):\n")
    for d in doc["decompositions"]:
        status = "match" if d["matches_printed"] else "MISMATCH"
        out.write(f"  {d['basis_assignment']}: {status}; derived reconstruction error "
                  f"{d['reconstruction_error']:.1e}, printed {d['printed_reconstruction_error']:.1e}\n")
        for t in d["missing_terms"]:
            out.write(f"      missing  |{' '.join(t)}>\n")
        for t in d["spurious_terms"]:
            out.write(f"      spurious |{' '.join(t)}>\n")


def cmd_verify_eqs(out=None) -> int:
    out = out or sys.stdout
    doc = table_document()
    _write_decomposition_summary(doc, out)
    return EXIT_OK


SWEEP_COLUMNS = ("schema_version", "strength", "axis", "detection_rate", "eve_bob_information",
                 "eve_alice_information", "eve_z_information", "eve_x_information")


def parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ConfigError(f"grid must be a:b:n, got {text!r}") from None
    if n < 1:
        raise ConfigError("grid needs n >= 1 points")
    return np.linspace(a, b, n)


def attack_sweep_rows(campaign: CampaignConfig, grid) -> list[dict]:
    eve = campaign.session.eve
    axis = eve.axis if isinstance(eve, EntangleAncilla) and eve.axis else Basis.Z
    rows = []
    for s in grid:
        strat = EntangleAncilla.controlled_rotation(float(s), axis)
        model = attack_model(strat, campaign.session.channel)
        rows.append({
            "strength": float(s), "axis": axis.value,
            "detection_rate": violation_probability(model),
            "eve_bob_information": eve_bob_information(model),
            "eve_alice_information": eve_alice_information(model),
            "eve_z_information": ancilla_information(strat, Basis.Z),
            "eve_x_information": ancilla_information(strat, Basis.X),
        })
    return rows


def cmd_attack_sweep(campaign: CampaignConfig, grid, out=None) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in attack_sweep_rows(campaign, grid):
        w.writerow([REPORT_SCHEMA_VERSION] + [r[c] if isinstance(r[c], str) else repr(round(r[c], 12) + 0.0)
                                              for c in SWEEP_COLUMNS[1:]])
    if campaign.path:
        with open(campaign.path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        (out or sys.stdout).write(buf.getvalue())
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def _load_campaign(path: str, args) -> CampaignConfig:
    with open(path, encoding="utf-8") as fh:
        campaign = parse_config(fh.read())
    if getattr(args, "seed", None) is not None:
        campaign = replace(campaign, session=replace(campaign.session, seed=args.seed))
    if getattr(args, "out", None):
        campaign = replace(campaign, path=args.out)
    if getattr(args, "format", None):
        campaign = replace(campaign, format=args.format)
    if getattr(args, "transcript", None):
        campaign = replace(campaign, transcript=args.transcript)
    return campaign


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ghzqkd", description="GHZ-triplet QKD simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a seeded campaign and write a report")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--format", choices=FORMATS)
    r.add_argument("--transcript", help="write JSONL transcripts here")
    r.add_argument("--jobs", type=int, help="parallel worker processes")

    t = sub.add_parser("table", help="derived correlation table and discrepancies")
    t.add_argument("--json", action="store_true")

    sub.add_parser("verify-eqs", help="check the printed basis decompositions")

    s = sub.add_parser("attack-sweep", help="exact entangling-attack tradeoff as CSV")
    s.add_argument("config")
    s.add_argument("--grid", default="0:1:11")
    s.add_argument("--out")

    v = sub.add_parser("verify-report", help="recompute a report from its transcript")
    v.add_argument("transcript")
    v.add_argument("--report", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        if args.command == "run":
            return cmd_run(_load_campaign(args.config, args), jobs=args.jobs)
        if args.command == "table":
            return cmd_table(args.json)
        if args.command == "verify-eqs":
            return cmd_verify_eqs()
        if args.command == "attack-sweep":
            return cmd_attack_sweep(_load_campaign(args.config, args), parse_grid(args.grid))
        if args.command == "verify-report":
            return cmd_verify_report(args.transcript, args.report)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
