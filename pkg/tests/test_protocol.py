import itertools
import json
import math

import numpy as np
import pytest

from ghzqkd import _kernel
from ghzqkd.ghzcorr import check_consistency, third_basis
from ghzqkd.postproc import PostprocConfig
from ghzqkd.protocol import (Alice, BasisAnnounce, Bob, LossReport, ProtocolOrderError, RoundTable,
                             SessionConfig, alice_measure_p1, alice_measure_p3, bob_measure,
                             eavesdrop_check, map_to_bits, run_session, select_test_subset)
from ghzqkd.qcore import Basis, Outcome, collapse, ghz_triplet, outcome_probabilities
from ghzqkd.threat import ChannelConfig, InterceptResend

import oracles

X, Y = Basis.X, Basis.Y
P, M = Outcome.PLUS, Outcome.MINUS


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


def table_from_rows(rows):
    """Build a RoundTable from (b1, o1, b2, o2, o3) label tuples, no loss or noise."""
    data = np.full((len(rows), _kernel.N_OUT), -1, dtype=np.int8)
    for i, (b1, o1, b2, o2, o3) in enumerate(rows):
        data[i, _kernel.B1] = "xy".index(b1)
        data[i, _kernel.O1] = "+-".index(o1)
        data[i, _kernel.LOST] = 0
        data[i, _kernel.B2] = "xy".index(b2)
        data[i, _kernel.O2] = "+-".index(o2)
        data[i, _kernel.B3] = 0 if b1 == b2 else 1
        data[i, _kernel.O3] = "+-".index(o3)
    return RoundTable(data)


def handshake(table):
    alice, bob = Alice(table), Bob(table)
    alice.receive_loss_report(bob.loss_report())
    delivered = bob.delivered()
    alice.receive_bases(delivered, bob.b2[delivered])
    alice.measure_p3()
    return alice, bob


# -- configuration ----------------------------------------------------------

@pytest.mark.parametrize("kwargs,field", [
    (dict(n_rounds=0), "session.n_rounds"),
    (dict(test_fraction=1.0), "session.test_fraction"),
    (dict(n_rounds=3, test_fraction=0.2), "test_fraction"),
    (dict(qber_abort_threshold=1.5), "session.qber_abort_threshold"),
    (dict(bitmap="gray"), "session.bitmap"),
    (dict(seed=-1), "session.seed"),
])
def test_session_config_validation(kwargs, field):
    with pytest.raises(ValueError, match=field):
        SessionConfig(**kwargs)


# -- run_session examples ---------------------------------------------------

def test_noise_free_thousand_rounds():
    res = run_session(SessionConfig(n_rounds=1000, seed=1))
    assert res.stats.violation_rate == 0.0 and not res.stats.aborted
    assert np.array_equal(res.raw_keys.alice_bits, res.raw_keys.bob_bits)
    assert len(res.raw_keys) == res.stats.delivered - res.stats.tested


def test_intercept_resend_session_detects_and_aborts():
    res = run_session(SessionConfig(n_rounds=20_000, seed=2, eve=InterceptResend()))
    assert abs(res.stats.violation_rate - 0.25) < 0.03
    assert res.stats.aborted and len(res.raw_keys) == 0 and res.final_alice is None


def test_loss_session_kept_count():
    n, f = 50_000, 0.2
    res = run_session(SessionConfig(n_rounds=n, seed=3, test_fraction=f, channel=ChannelConfig(loss_prob=0.1)))
    s = res.stats
    assert s.kept == s.delivered - s.tested
    expected = (1 - f) * 0.9 * n
    assert abs(s.kept - expected) < 3 * math.sqrt(n * 0.72 * 0.28)
    assert abs(s.lost / n - 0.1) < three_sigma(0.1, n)


def test_result_unpacks_to_transcript_keys_stats():
    transcript, raw, stats = run_session(SessionConfig(n_rounds=200, seed=0))
    assert stats.n_rounds == 200 and len(raw) == stats.kept
    assert next(transcript.messages()).tag == "loss_report"


# -- per-round steps --------------------------------------------------------

def test_alice_p1_bases_balanced_and_outcomes_fair():
    rng = np.random.default_rng(5)
    counts = {(b, o): 0 for b in (X, Y) for o in (P, M)}
    n = 10_000
    for _ in range(n):
        b, o, _ = alice_measure_p1(ghz_triplet(), rng)
        counts[(b, o)] += 1
    n_x = counts[(X, P)] + counts[(X, M)]
    assert abs(n_x / n - 0.5) < three_sigma(0.5, n)
    for b in (X, Y):
        nb = counts[(b, P)] + counts[(b, M)]
        assert abs(counts[(b, P)] / nb - 0.5) < three_sigma(0.5, nb)
    # oracle: P1 plus probability is 1/2 in either basis
    for b in "xy":
        assert sum(oracles.triple_probability((b + "+", c2, c3))
                   for c2 in ("z+", "z-") for c3 in ("z+", "z-")) == pytest.approx(0.5)


def test_alice_p1_is_reproducible():
    seq = lambda: [alice_measure_p1(ghz_triplet(), r)[:2] for r in [np.random.default_rng(6)] * 50]
    assert seq() == seq()


def test_bob_outcomes_split_after_alice_x_plus():
    _, post = collapse(ghz_triplet(), 0, X, P)
    assert outcome_probabilities(post, 1, X) == pytest.approx((0.5, 0.5), abs=1e-12)
    # oracle on the remaining Bell pair (|00> + |11>)/sqrt2
    bell = oracles.bell()
    p_plus = sum(abs(np.vdot(np.kron(oracles.KET[k3], oracles.KET["x+"]), bell)) ** 2 for k3 in ("z+", "z-"))
    assert p_plus == pytest.approx(0.5)
    rng = np.random.default_rng(7)
    outs = [bob_measure(post, rng) for _ in range(4000)]
    xs = [o for b, o, _ in outs if b is X]
    assert abs(xs.count(P) / len(xs) - 0.5) < three_sigma(0.5, len(xs))


def test_no_loss_channel_never_loses():
    res = run_session(SessionConfig(n_rounds=5000, seed=8))
    assert res.stats.lost == 0 and not res.rounds.lost.any()


def test_p3_before_announcement_is_an_order_error():
    with pytest.raises(ProtocolOrderError):
        alice_measure_p3(ghz_triplet(), X, None, np.random.default_rng(0))
    table = table_from_rows([("x", "+", "x", "+", "+")])
    alice = Alice(table)
    with pytest.raises(ProtocolOrderError):
        alice.key_bits(np.array([0]), "plus_zero")


@pytest.mark.parametrize("b1,b2,b3", [(X, X, X), (Y, X, Y), (X, Y, Y), (Y, Y, X)])
def test_p3_basis_follows_announcement(b1, b2, b3):
    _, post = collapse(ghz_triplet(), 0, b1, P)
    basis, _, _ = alice_measure_p3(post, b1, b2, np.random.default_rng(1))
    assert basis is b3


def test_noise_free_rounds_always_consistent():
    rng = np.random.default_rng(9)
    for _ in range(10_000):
        b1, o1, s = alice_measure_p1(ghz_triplet(), rng)
        b2, o2, s = bob_measure(s, rng)
        b3, o3, s = alice_measure_p3(s, b1, b2, rng)
        assert check_consistency(b1, o1, b2, o2, b3, o3)


# -- test selection and checking --------------------------------------------

def test_test_subset_size_coverage_and_determinism():
    cands = np.arange(1000)
    sub = select_test_subset(cands, 0.2, np.random.default_rng(10))
    assert abs(sub.size - 200) < 3 * math.sqrt(1000 * 0.2 * 0.8)
    assert np.array_equal(sub, select_test_subset(cands, 0.2, np.random.default_rng(10)))
    res = run_session(SessionConfig(n_rounds=1000, seed=11))
    d = res.rounds.data
    tested = np.flatnonzero(res.rounds.tested)
    combos = {(int(d[i, _kernel.B1]), int(d[i, _kernel.B2])) for i in tested}
    assert combos == set(itertools.product((0, 1), repeat=2))


def test_eavesdrop_check_all_consistent():
    rows = [("x", "+", "x", "-", "-"), ("y", "-", "x", "+", "y+"[1]), ("x", "+", "y", "+", "-")]
    # second row: YXY with o1=-, o2=+ needs o3=+ ; third row: XYY with o1=+, o2=+ needs o3=-
    table = table_from_rows(rows)
    alice, bob = handshake(table)
    bob.tested = np.arange(3)
    verdict = eavesdrop_check(alice, bob.reveal_tests(), 0.11)
    assert verdict.accept and verdict.violation_rate == 0.0 and verdict.n_tested == 3


def test_eavesdrop_check_flags_violation():
    table = table_from_rows([("x", "-", "x", "-", "-"), ("x", "+", "x", "+", "+")])
    alice, bob = handshake(table)
    bob.tested = np.arange(2)
    v = eavesdrop_check(alice, bob.reveal_tests(), 0.11)
    assert v.n_violations == 1 and v.violation_rate == 0.5 and not v.accept


@pytest.mark.parametrize("p", [0.1, 0.4])
def test_depolarizing_violation_rate(p):
    cfg = SessionConfig(n_rounds=40_000, seed=12, channel=ChannelConfig(depolarize_prob=p),
                        qber_abort_threshold=1.0, postproc=PostprocConfig(enabled=False))
    s = run_session(cfg).stats
    assert abs(s.violation_rate - p / 2) < three_sigma(p / 2, s.tested)


# -- bit mapping ------------------------------------------------------------

def test_bob_y_plus_and_alice_x_minus_both_record_zero():
    # P1 = x-, Bob y+; XYY forces o3 = + so Alice's P3 is y+
    table = table_from_rows([("x", "-", "y", "+", "+")])
    alice, bob = handshake(table)
    raw = map_to_bits(alice, bob, np.array([0]))
    assert raw.bob_bits.tolist() == [0] and raw.alice_bits.tolist() == [0]


def test_bob_x_minus_is_bit_one():
    table = table_from_rows([("x", "+", "x", "-", "-")])
    alice, bob = handshake(table)
    assert map_to_bits(alice, bob, np.array([0])).bob_bits.tolist() == [1]
    assert map_to_bits(alice, bob, np.array([0]), "plus_one").bob_bits.tolist() == [0]


def test_noise_free_ten_thousand_rounds_hamming_zero():
    raw = run_session(SessionConfig(n_rounds=10_000, seed=13)).raw_keys
    assert np.count_nonzero(raw.alice_bits != raw.bob_bits) == 0 and len(raw) > 7000


def test_plus_one_bitmap_inverts_keys():
    a = run_session(SessionConfig(n_rounds=500, seed=14, postproc=PostprocConfig(enabled=False))).raw_keys
    b = run_session(SessionConfig(n_rounds=500, seed=14, bitmap="plus_one",
                                  postproc=PostprocConfig(enabled=False))).raw_keys
    assert np.array_equal(a.bob_bits, 1 - b.bob_bits)


# -- invariants -------------------------------------------------------------

@pytest.fixture(scope="module")
def noisy_session():
    return run_session(SessionConfig(n_rounds=4000, seed=15, channel=ChannelConfig(0.1, 0.1)))


def test_zero_basis_mismatch_discards(noisy_session):
    s = noisy_session.stats
    assert s.kept == (s.n_rounds - s.lost) - s.tested
    kept = noisy_session.raw_keys.rounds
    assert not noisy_session.rounds.lost[kept].any() and not noisy_session.rounds.tested[kept].any()


def test_public_messages_never_reveal_alice_or_key_outcomes(noisy_session):
    tr = noisy_session.transcript
    tested = set(np.flatnonzero(noisy_session.rounds.tested).tolist())
    final_rounds = set(noisy_session.raw_keys.rounds.tolist())
    sampled = set()
    for line in tr.lines(include_private=False):
        rec = json.loads(line)
        assert not {"b1", "o1", "b3", "o3", "o2", "hex"} & set(rec)
        if rec["tag"] == "test_reveal":
            assert rec["round"] in tested and rec["sender"] == "bob"
        if rec["tag"] == "qber_sample":
            sampled = set(rec["rounds"])
        if rec.get("sender") == "alice":
            assert rec["tag"] in {"verdict", "qber_estimate", "recon_start", "recon", "key_check", "pa_seed"}
        if "outcome" in rec:
            assert rec["tag"] == "test_reveal"
    # sampled outcomes are sacrificed: they are not part of the reconciled key
    assert sampled and sampled <= final_rounds
    assert noisy_session.stats.corrected == len(final_rounds) - len(sampled)


def test_basis_rule_on_every_round(noisy_session):
    t = noisy_session.rounds
    for i in range(len(t)):
        r = t.round(i)
        if not r.lost:
            assert r.alice_b3 is third_basis(r.alice_b1, r.bob_b2)
        else:
            assert r.bob_b2 is None and r.inferred_o2 is None
        if r.tested:
            assert r.consistent is check_consistency(r.alice_b1, r.alice_o1, r.bob_b2, r.bob_o2,
                                                     r.alice_b3, r.alice_o3)
        else:
            assert r.consistent is None


def test_noise_free_many_seeds():
    for seed in range(100):
        res = run_session(SessionConfig(n_rounds=1000, seed=seed))
        assert res.stats.violations == 0
        assert np.array_equal(res.raw_keys.alice_bits, res.raw_keys.bob_bits)


def test_identical_config_gives_identical_transcript():
    cfg = SessionConfig(n_rounds=3000, seed=16, channel=ChannelConfig(0.05, 0.05))
    a = list(run_session(cfg).transcript.lines())
    b = list(run_session(cfg).transcript.lines())
    assert a == b
    c = list(run_session(SessionConfig(n_rounds=3000, seed=17, channel=ChannelConfig(0.05, 0.05))).transcript.lines())
    assert a != c


def test_transcript_lines_are_sorted_json():
    res = run_session(SessionConfig(n_rounds=100, seed=18))
    for line in res.transcript.lines():
        rec = json.loads(line)
        assert json.dumps(rec, sort_keys=True, separators=(",", ":")) == line
        assert {"session", "seq", "channel", "tag", "round"} <= set(rec)


def test_message_order():
    res = run_session(SessionConfig(n_rounds=300, seed=19))
    tags = [m.tag for m in res.transcript.messages()]
    first = {t: tags.index(t) for t in set(tags)}
    order = ["loss_report", "basis", "test_reveal", "verdict", "qber_sample", "qber_estimate",
             "recon_start", "recon", "key_check", "key_check_result", "pa_seed"]
    assert [first[t] for t in order] == sorted(first[t] for t in order)


def test_loss_report_lists_lost_rounds():
    res = run_session(SessionConfig(n_rounds=2000, seed=20, channel=ChannelConfig(loss_prob=0.3)))
    msg = next(res.transcript.messages())
    assert isinstance(msg, LossReport)
    assert list(msg.rounds) == np.flatnonzero(res.rounds.lost).tolist()
    announced = [m.round for m in res.transcript.messages() if isinstance(m, BasisAnnounce)]
    assert set(announced).isdisjoint(msg.rounds) and len(announced) == 2000 - len(msg.rounds)
