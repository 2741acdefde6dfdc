"""Acceptance suite: one group of checks per criterion, summarized by conftest."""
import math
import time

import numpy as np
import pytest

from ghzqkd import cli, ghzcorr
from ghzqkd.cli import CampaignConfig, render_report, run_campaign, session_summary
from ghzqkd.ghzcorr import derive_table, table_discrepancies, verify_decompositions
from ghzqkd.postproc import PostprocConfig, toeplitz_hash
from ghzqkd.protocol import SessionConfig, run_session
from ghzqkd.qcore import Basis
from ghzqkd.threat import (ChannelConfig, EntangleAncilla, InterceptResend, ancilla_information,
                           attack_model, eve_bob_information, eve_information, public_bit_entropy,
                           violation_probability)

import oracles

acceptance = pytest.mark.acceptance


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


# -- 1 ----------------------------------------------------------------------

@acceptance(1, "correlation table: 16 certain entries, one printed cell disagrees")
def test_correlation_table():
    (table, diffs), dt = timed(lambda: (derive_table(), table_discrepancies()))
    assert dt < 1.0
    assert len(table) == 16
    for _, _, e in table.rows():
        assert abs(e.probability - 1.0) < 1e-12
    agree = sum(ghzcorr.REFERENCE_TABLE[(p1, p2)] == e.label for p1, p2, e in table.rows())
    assert agree == 15
    assert [(d.p1, d.p2) for d in diffs] == [("y-", "y+")]
    # brute-force projection oracle for the disputed cell
    b3 = oracles.third("y", "y")
    probs = {o: oracles.triple_probability(("y-", "y+", b3 + o)) for o in "+-"}
    assert probs["+"] / sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    assert diffs[0].derived == b3 + "+" == "x+" and diffs[0].printed == "x-"


# -- 2 ----------------------------------------------------------------------

@acceptance(2, "basis decompositions: derived groupings exact, printed mismatches enumerated")
def test_decompositions():
    rep, dt = timed(verify_decompositions)
    assert dt < 1.0
    for key in ("XXX", "YYX", "YXY", "XYY"):
        assert rep[key].reconstruction_error < 1e-12
    assert rep["XXX"].matches_printed and rep["XYY"].matches_printed
    yyx, yxy = rep["YYX"], rep["YXY"]
    assert set(yyx.missing) == {("y+", "y+", "x-"), ("y-", "y-", "x-")}
    assert set(yyx.spurious) == {("x+", "x-", "x-"), ("x-", "x+", "x-")}
    assert yxy.missing == [("y-", "x+", "y+")] and yxy.spurious == [("y-", "x-", "y+")]


# -- 3 ----------------------------------------------------------------------

@acceptance(3, "noise-free correctness over 100 seeds")
def test_noise_free_correctness():
    t0 = time.perf_counter()
    for seed in range(100):
        res = run_session(SessionConfig(n_rounds=1000, seed=seed))
        s = res.stats
        assert s.violations == 0 and s.violation_rate == 0.0 and not s.aborted
        assert res.final_alice is not None and len(res.final_alice) > 0
        assert np.array_equal(res.final_alice.bits, res.final_bob.bits)
        assert s.kept == s.delivered - s.tested  # no basis-mismatch discards
        assert s.lost == 0 and s.delivered == 1000
    assert time.perf_counter() - t0 < 10.0


# -- 4 ----------------------------------------------------------------------

@acceptance(4, "efficiency eta = L/(L+l) at 10% loss, twice the BB84 baseline")
def test_efficiency():
    t0 = time.perf_counter()
    camp = CampaignConfig(SessionConfig(n_rounds=100_000, seed=21, channel=ChannelConfig(loss_prob=0.1)))
    report, _ = run_campaign(camp)
    eff = report["efficiency"]
    L = sum(r["delivered"] for r in report["sessions"])
    l = sum(r["lost"] for r in report["sessions"])
    assert L + l == 100_000
    assert eff["eta"] == L / (L + l)
    assert abs(eff["eta"] - 0.9) <= 0.01
    assert eff["eta"] == 2 * eff["eta_bb84_baseline"]
    lossless, _ = run_campaign(CampaignConfig(SessionConfig(n_rounds=100_000, seed=22)))
    assert lossless["efficiency"]["eta"] == 1.0
    assert time.perf_counter() - t0 < 30.0


# -- 5 ----------------------------------------------------------------------

@acceptance(5, "intercept-resend detected at the enumerated 0.25 rate and aborted")
def test_intercept_resend_detection():
    expected = oracles.intercept_resend_detection()  # fixed before simulating
    assert expected == pytest.approx(0.25, abs=1e-12)
    t0 = time.perf_counter()
    res = run_session(SessionConfig(n_rounds=100_000, seed=23, eve=InterceptResend()))
    assert abs(res.stats.violation_rate - expected) <= 0.02
    assert res.stats.aborted and SessionConfig().qber_abort_threshold == 0.11
    assert time.perf_counter() - t0 < 60.0


# -- 6 ----------------------------------------------------------------------

@acceptance(6, "public messages leave Bob's key bit uniform")
def test_basis_knowledge_insufficiency():
    ent = public_bit_entropy()
    for value in ent.values():
        assert abs(value - 1.0) < 1e-9
    # independent oracle: P2's reduced state is maximally mixed, and staying
    # uniform when all three bases are known
    rho = np.outer(oracles.ghz(), oracles.ghz().conj()).reshape([2] * 6)
    rho2 = np.einsum("ajbakb->jk", rho)  # trace out P1 (bit 0) and P3 (bit 2)
    assert np.allclose(rho2, np.eye(2) / 2, atol=1e-12)
    for combo in ("xxx", "xyy", "yxy", "yyx"):
        b1, b2, b3 = combo
        p = [sum(oracles.triple_probability((b1 + o1, b2 + o2, b3 + o3)) for o1 in "+-" for o3 in "+-")
             for o2 in "+-"]
        h = -sum(x * math.log2(x) for x in p)
        assert abs(h - 1.0) < 1e-9
    # Eve that only listens has zero information on the sifted bits
    assert eve_information(EntangleAncilla.identity()).eve_bob_mutual_information == pytest.approx(0, abs=1e-9)


# -- 7 ----------------------------------------------------------------------

@acceptance(7, "entangling-attack tradeoff: identity silent, family monotone")
def test_entangling_attack_tradeoff():
    t0 = time.perf_counter()
    ident = attack_model(EntangleAncilla.identity())
    assert abs(violation_probability(ident)) < 1e-9 and abs(eve_bob_information(ident)) < 1e-9
    grid = np.linspace(0, 1, 11)
    det, info_bob, info_z = [], [], []
    for s in grid:
        strat = EntangleAncilla.controlled_rotation(float(s), Basis.Z)
        model = attack_model(strat)
        det.append(violation_probability(model))
        info_bob.append(eve_bob_information(model))
        info_z.append(ancilla_information(strat, Basis.Z))
        assert det[-1] == pytest.approx(oracles.ancilla_violation(s * math.pi / 2, "z"), abs=1e-12)
    for series in (det, info_bob, info_z):
        assert all(b >= a - 1e-12 for a, b in zip(series, series[1:]))
    assert det[-1] > 0 and info_z[-1] == pytest.approx(1.0, abs=1e-9)
    assert time.perf_counter() - t0 < 10.0


# -- 8 ----------------------------------------------------------------------

@pytest.mark.slow
@acceptance(8, "post-processing: 10^4-bit keys reconcile, hashing linear and uniform, accounting holds")
def test_reconciliation_thousand_sessions():
    t0 = time.perf_counter()
    equal, sizes, qbers = 0, [], []
    for seed in range(1000):
        cfg = SessionConfig(n_rounds=13_900, seed=10_000 + seed, channel=ChannelConfig(depolarize_prob=0.06))
        res = run_session(cfg)
        s = res.stats
        assert not s.aborted
        sizes.append(s.corrected)
        qbers.append(s.raw_qber)
        equal += s.recon_ok and s.verify_ok and s.final_keys_equal
        assert session_summary(seed, cfg, s)["accounting"]["holds"]
    assert equal >= 999
    assert 9000 <= np.mean(sizes) <= 11000 and abs(np.mean(qbers) - 0.03) < 0.003
    assert time.perf_counter() - t0 < 120.0


@acceptance(8, "post-processing: 10^4-bit keys reconcile, hashing linear and uniform, accounting holds")
def test_privacy_amplification_linearity():
    rng = np.random.default_rng(81)
    for trial in range(1000):
        a, b = rng.integers(0, 2, 256, dtype=np.uint8), rng.integers(0, 2, 256, dtype=np.uint8)
        assert np.array_equal(toeplitz_hash(a ^ b, trial, 64), toeplitz_hash(a, trial, 64) ^ toeplitz_hash(b, trial, 64))


@acceptance(8, "post-processing: 10^4-bit keys reconcile, hashing linear and uniform, accounting holds")
def test_privacy_amplification_uniformity():
    rng = np.random.default_rng(82)
    n, m = 10_000, 16
    ones = np.zeros(m)
    for seed in range(n):
        ones += toeplitz_hash(rng.integers(0, 2, 64, dtype=np.uint8), seed, m)
    assert np.all(np.abs(ones / n - 0.5) < 3 * math.sqrt(0.25 / n))


@acceptance(8, "post-processing: 10^4-bit keys reconcile, hashing linear and uniform, accounting holds")
def test_accounting_in_every_report():
    for kw in (dict(), dict(channel=ChannelConfig(0.2, 0.06)), dict(eve=InterceptResend()),
               dict(postproc=PostprocConfig(enabled=False))):
        report, _ = run_campaign(CampaignConfig(SessionConfig(n_rounds=3000, seed=5, **kw), sessions=3))
        assert report["accounting_ok"]
        assert all(r["accounting"]["holds"] for r in report["sessions"])


# -- 9 ----------------------------------------------------------------------

@acceptance(9, "determinism and auditability: byte-identical outputs, verify-report agrees")
def test_determinism_and_audit(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[session]\nn_rounds = 5000\nsessions = 3\nseed = 77\n"
                   "[channel]\nloss_prob = 0.1\ndepolarize_prob = 0.06\n", encoding="utf-8")
    outs = []
    for k in range(2):
        rep, tr = tmp_path / f"r{k}.json", tmp_path / f"t{k}.jsonl"
        assert cli.main(["run", str(cfg), "--out", str(rep), "--transcript", str(tr)]) == 0
        outs.append((rep.read_bytes(), tr.read_bytes()))
    assert outs[0] == outs[1]
    assert cli.main(["verify-report", str(tmp_path / "t0.jsonl"), "--report", str(tmp_path / "r0.json")]) == 0
    rebuilt = cli.report_from_transcript(open(tmp_path / "t0.jsonl", encoding="utf-8"))
    assert render_report(rebuilt, "json").encode() == outs[0][0]
