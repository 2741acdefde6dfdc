import itertools

import numpy as np
import pytest

from ghzqkd import ghzcorr
from ghzqkd.ghzcorr import (BasisCombo, InvalidBasisError, VALID_COMBOS, check_consistency,
                            derive_basis_rule, derive_table, infer_partner_outcome, parity_law,
                            parity_target, table_discrepancies, third_basis, verify_decompositions)
from ghzqkd.qcore import Basis, Outcome, ghz_triplet, measure

import oracles

X, Y, Z = Basis.X, Basis.Y, Basis.Z
P, M = Outcome.PLUS, Outcome.MINUS


def lab(text):
    return (X if text[0] == "x" else Y), (P if text[1] == "+" else M)


# -- basis rule and parity law ----------------------------------------------

@pytest.mark.parametrize("b1,b2,expected", [(X, X, X), (X, Y, Y), (Y, Y, X), (Y, X, Y)])
def test_third_basis(b1, b2, expected):
    assert third_basis(b1, b2) is expected


def test_third_basis_rejects_z():
    with pytest.raises(InvalidBasisError):
        third_basis(Z, X)


def test_basis_rule_is_derived_from_the_state():
    rule = derive_basis_rule()
    assert rule == {(b1, b2): third_basis(b1, b2) for b1 in (X, Y) for b2 in (X, Y)}


def test_only_four_combos_are_valid():
    valid = [c for c in (BasisCombo(*t) for t in itertools.product((X, Y), repeat=3)) if c.valid]
    assert sorted(map(str, valid)) == ["XXX", "XYY", "YXY", "YYX"]
    assert set(map(str, VALID_COMBOS)) == {"XXX", "XYY", "YXY", "YYX"}


def test_parity_targets_match_correlator_oracle():
    for c in VALID_COMBOS:
        assert int(parity_target(c)) == round(oracles.correlator(str(c).lower()))
    assert parity_target(BasisCombo.parse("XXX")) is P
    assert parity_target(BasisCombo.parse("XYY")) is M
    assert parity_target(BasisCombo.parse("YYX")) is M
    assert len(parity_law()) == 4


def test_parity_target_invalid_combo():
    with pytest.raises(InvalidBasisError):
        parity_target(BasisCombo.parse("XXY"))


def test_check_consistency_examples():
    assert check_consistency(X, P, X, M, X, M)
    assert not check_consistency(X, M, X, M, X, M)
    assert not check_consistency(X, P, Y, P, X, P)  # basis rule broken


def test_infer_partner_examples():
    assert infer_partner_outcome(X, M, X, M, X) is P
    assert infer_partner_outcome(X, P, X, P, X) is P
    assert infer_partner_outcome(Y, P, Y, M, X) is P
    with pytest.raises(InvalidBasisError):
        infer_partner_outcome(X, P, X, P, Y)


def test_parity_law_holds_in_ten_thousand_seeded_triplets():
    rng = np.random.default_rng(77)
    for _ in range(10_000):
        b1, b2 = (X, Y)[rng.integers(2)], (X, Y)[rng.integers(2)]
        b3 = third_basis(b1, b2)
        s = ghz_triplet()
        o1, s = measure(s, 0, b1, rng)
        o2, s = measure(s, 1, b2, rng)
        o3, s = measure(s, 2, b3, rng)
        assert check_consistency(b1, o1, b2, o2, b3, o3)


# -- correlation table ------------------------------------------------------

def test_table_has_sixteen_certain_entries():
    table = derive_table()
    assert len(table) == 16
    for (b1, o1, b2, o2), e in table.entries.items():
        assert e.probability == pytest.approx(1.0, abs=1e-12)
        assert e.b3 is third_basis(b1, b2)


def test_table_entries_agree_with_brute_force_projection():
    table = derive_table()
    for p1, p2, e in table.rows():
        b1, b2 = p1[0], p2[0]
        b3 = oracles.third(b1, b2)
        probs = {o3: oracles.triple_probability((p1, p2, b3 + o3)) for o3 in "+-"}
        forced = max(probs, key=probs.get)
        assert probs[forced] / sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
        assert e.label == b3 + forced


def test_table_examples():
    t = derive_table()
    assert t.forced(X, P, X, P).label == "x+"
    assert t.forced(X, M, Y, M).label == "y-"
    assert t.forced(Y, M, Y, P).label == "x+"


def test_exactly_one_printed_cell_disagrees():
    diffs = table_discrepancies()
    assert [(d.p1, d.p2, d.printed, d.derived) for d in diffs] == [("y-", "y+", "x-", "x+")]


def test_reference_table_transcription():
    # 15 cells agree with the derivation, so the transcription is the printed table up to one cell
    agree = sum(ghzcorr.REFERENCE_TABLE[(p1, p2)] == e.label for p1, p2, e in derive_table().rows())
    assert agree == 15


def test_inference_soundness_exhaustive():
    for (b1, o1, b2, o2), e in derive_table().entries.items():
        assert infer_partner_outcome(b1, o1, e.b3, e.o3, b2) is o2
        assert check_consistency(b1, o1, b2, o2, e.b3, e.o3)


def test_two_jointly_property():
    # one party's result alone never fixes another's: each o2 has conditional probability 1/2
    for c in VALID_COMBOS:
        for o1 in "+-":
            b1, b2, b3 = str(c).lower()
            joint = {o2: sum(oracles.triple_probability((b1 + o1, b2 + o2, b3 + o3)) for o3 in "+-")
                     for o2 in "+-"}
            total = sum(joint.values())
            assert joint["+"] / total == pytest.approx(0.5, abs=1e-12)


def test_table_to_dict_shape():
    rows = derive_table().to_dict()
    assert len(rows) == 16 and set(rows[0]) == {"p1", "p2", "p3", "probability"}


# -- decompositions ---------------------------------------------------------

def test_derived_groupings_reconstruct_the_state():
    rep = verify_decompositions()
    for key in ("XXX", "XYY", "YXY", "YYX"):
        assert rep[key].reconstruction_error < 1e-12


def test_printed_xxx_and_xyy_match_term_for_term():
    rep = verify_decompositions()
    assert rep["XXX"].matches_printed and rep["XYY"].matches_printed
    assert set(rep.mismatched) == {"YYX", "YXY"}


def test_yyx_grouping_and_mismatch_terms():
    d = verify_decompositions()["YYX"]
    assert {tuple(p) for p in d.grouping["x+"]} == {("y+", "y-"), ("y-", "y+")}
    assert {tuple(p) for p in d.grouping["x-"]} == {("y+", "y+"), ("y-", "y-")}
    assert set(d.missing) == {("y+", "y+", "x-"), ("y-", "y-", "x-")}
    assert set(d.spurious) == {("x+", "x-", "x-"), ("x-", "x+", "x-")}


def test_yxy_mismatch_terms():
    d = verify_decompositions()["YXY"]
    assert d.missing == [("y-", "x+", "y+")]
    assert d.spurious == [("y-", "x-", "y+")]
    assert d.printed_reconstruction_error > 0.1


def test_printed_yyx_second_group_is_an_x_basis_rewrite():
    # (|x+x-> + |x-x+>) equals (|y+y+> + |y-y->) up to numerics, checked with raw kets
    k = oracles.KET
    lhs = np.kron(k["x-"], k["x+"]) + np.kron(k["x+"], k["x-"])
    rhs = np.kron(k["y+"], k["y+"]) + np.kron(k["y-"], k["y-"])
    assert np.allclose(lhs, rhs)
    assert verify_decompositions()["YYX"].printed_reconstruction_error < 1e-12


def test_reference_decomposition_transcription_expands_like_oracle():
    # recompute each printed expansion with raw kets and compare against the module's number
    rep = verify_decompositions()
    for key, terms in ghzcorr.REFERENCE_DECOMPOSITIONS.items():
        v = sum(0.5 * oracles.product(*(oracles.KET[t] for t in term)) for term in terms)
        err = np.max(np.abs(v - oracles.ghz()))
        assert err == pytest.approx(rep[key].printed_reconstruction_error, abs=1e-12)
