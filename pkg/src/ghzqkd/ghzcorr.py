"""GHZ triplet correlations derived from the state vector.

Every structure here (basis rule, parity law, lookup table, basis
decompositions) is computed by projecting ``(|000> + |111>)/sqrt(2)`` onto
product eigenbases. The hand-transcribed reference table and decompositions
are used only to report where the printed forms disagree with the derivation.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .qcore import (
    NORM_TOL,
    Basis,
    Outcome,
    event_probability,
    eigenvector,
    ghz_triplet,
    label,
    parse_label,
)

XY = (Basis.X, Basis.Y)
OUTCOMES = (Outcome.PLUS, Outcome.MINUS)


class InvalidBasisError(ValueError):
    pass


def _require_xy(*bases: Basis) -> None:
    for b in bases:
        if b not in XY:
            raise InvalidBasisError(f"basis {b} not in {{x, y}}")


def third_basis(b1: Basis, b2: Basis) -> Basis:
    """Basis Alice uses on P3: X when P1 and P2 share a basis, else Y."""
    _require_xy(b1, b2)
    return Basis.X if b1 is b2 else Basis.Y


@dataclass(frozen=True)
class BasisCombo:
    b1: Basis
    b2: Basis
    b3: Basis

    @property
    def valid(self) -> bool:
        return (all(b in XY for b in (self.b1, self.b2, self.b3))
                and self.b3 is third_basis(self.b1, self.b2))

    def __str__(self) -> str:
        return "".join(b.value.upper() for b in (self.b1, self.b2, self.b3))

    @classmethod
    def parse(cls, text: str) -> "BasisCombo":
        b = [Basis(c.lower()) for c in text.strip()]
        if len(b) != 3:
            raise InvalidBasisError(f"combo needs three bases: {text!r}")
        return cls(*b)


VALID_COMBOS = tuple(BasisCombo(b1, b2, third_basis(b1, b2)) for b1 in XY for b2 in XY)


def _triple_probabilities(combo: BasisCombo, state=None) -> dict:
    state = ghz_triplet() if state is None else state
    return {
        (o1, o2, o3): event_probability(
            state, [(0, combo.b1, o1), (1, combo.b2, o2), (2, combo.b3, o3)])
        for o1, o2, o3 in itertools.product(OUTCOMES, repeat=3)
    }


def derive_basis_rule() -> dict[tuple[Basis, Basis], Basis]:
    """For each (b1, b2) find the unique b3 in {x, y} forcing P3's outcome."""
    rule = {}
    for b1, b2 in itertools.product(XY, repeat=2):
        forcing = []
        for b3 in XY:
            probs = _triple_probabilities(BasisCombo(b1, b2, b3))
            forced = all(
                min(probs[(o1, o2, Outcome.PLUS)], probs[(o1, o2, Outcome.MINUS)]) < NORM_TOL
                for o1, o2 in itertools.product(OUTCOMES, repeat=2))
            if forced:
                forcing.append(b3)
        if len(forcing) != 1:
            raise RuntimeError(f"no unique forcing basis for {b1}{b2}: {forcing}")
        rule[(b1, b2)] = forcing[0]
    return rule


@functools.lru_cache(maxsize=None)
def parity_law() -> dict[BasisCombo, Outcome]:
    """Sign of ``<s_b1 s_b2 s_b3>`` on the GHZ triplet for each valid combo."""
    law = {}
    for combo in VALID_COMBOS:
        probs = _triple_probabilities(combo)
        corr = sum(int(o1) * int(o2) * int(o3) * p for (o1, o2, o3), p in probs.items())
        if abs(abs(corr) - 1.0) > 1e-12:
            raise RuntimeError(f"combo {combo} is not perfectly correlated ({corr})")
        law[combo] = Outcome.PLUS if corr > 0 else Outcome.MINUS
    return law


def parity_target(combo: BasisCombo) -> Outcome:
    if not combo.valid:
        raise InvalidBasisError(f"invalid basis combo {combo}")
    return parity_law()[combo]


def check_consistency(b1: Basis, o1: Outcome, b2: Basis, o2: Outcome,
                      b3: Basis, o3: Outcome) -> bool:
    """True iff the bases form a valid combo and the outcomes obey its parity."""
    combo = BasisCombo(b1, b2, b3)
    if not combo.valid:
        return False
    return int(o1) * int(o2) * int(o3) == int(parity_law()[combo])


def infer_partner_outcome(b1: Basis, o1: Outcome, b3: Basis, o3: Outcome,
                          b2: Basis) -> Outcome:
    """Bob's P2 outcome implied by Alice's P1 and P3 results."""
    target = parity_target(BasisCombo(b1, b2, b3))
    return Outcome(int(target) * int(o1) * int(o3))


# -- correlation table ------------------------------------------------------

@dataclass(frozen=True)
class TableEntry:
    b3: Basis
    o3: Outcome
    probability: float

    @property
    def label(self) -> str:
        return label(self.b3, self.o3)


@dataclass(frozen=True)
class CorrelationTable:
    """Forced P3 outcome for every (P1, P2) eigenstate pair."""

    entries: dict

    def forced(self, b1: Basis, o1: Outcome, b2: Basis, o2: Outcome) -> TableEntry:
        return self.entries[(b1, o1, b2, o2)]

    def __len__(self) -> int:
        return len(self.entries)

    def rows(self):
        for (b1, o1, b2, o2), e in sorted(self.entries.items(), key=_entry_order):
            yield label(b1, o1), label(b2, o2), e

    def to_dict(self) -> list[dict]:
        return [{"p1": p1, "p2": p2, "p3": e.label, "probability": e.probability}
                for p1, p2, e in self.rows()]


_LABEL_ORDER = ["x+", "x-", "y+", "y-"]


def _entry_order(item):
    (b1, o1, b2, o2), _ = item
    return _LABEL_ORDER.index(label(b2, o2)), _LABEL_ORDER.index(label(b1, o1))


def derive_table() -> CorrelationTable:
    """Project the GHZ triplet for all 16 (P1, P2) results and read off P3."""
    state = ghz_triplet()
    entries = {}
    for b1, b2 in itertools.product(XY, repeat=2):
        b3 = third_basis(b1, b2)
        for o1, o2 in itertools.product(OUTCOMES, repeat=2):
            p12 = event_probability(state, [(0, b1, o1), (1, b2, o2)])
            best = None
            for o3 in OUTCOMES:
                p = event_probability(state, [(0, b1, o1), (1, b2, o2), (2, b3, o3)]) / p12
                if best is None or p > best[1]:
                    best = (o3, p)
            if abs(best[1] - 1.0) > NORM_TOL:
                raise RuntimeError(f"P3 not forced for {label(b1, o1)},{label(b2, o2)}")
            entries[(b1, o1, b2, o2)] = TableEntry(b3, best[0], best[1])
    return CorrelationTable(entries)


# Hand transcription of the printed lookup table: {(P1, P2): P3}.
REFERENCE_TABLE = {
    ("x+", "x+"): "x+", ("x-", "x+"): "x-", ("y+", "x+"): "y-", ("y-", "x+"): "y+",
    ("x+", "x-"): "x-", ("x-", "x-"): "x+", ("y+", "x-"): "y+", ("y-", "x-"): "y-",
    ("x+", "y+"): "y-", ("x-", "y+"): "y+", ("y+", "y+"): "x-", ("y-", "y+"): "x-",
    ("x+", "y-"): "y+", ("x-", "y-"): "y-", ("y+", "y-"): "x+", ("y-", "y-"): "x-",
}


@dataclass(frozen=True)
class TableDiscrepancy:
    p1: str
    p2: str
    printed: str
    derived: str


def table_discrepancies(table: CorrelationTable | None = None,
                        reference: dict | None = None) -> list[TableDiscrepancy]:
    table = derive_table() if table is None else table
    reference = REFERENCE_TABLE if reference is None else reference
    out = []
    for p1, p2, e in table.rows():
        printed = reference[(p1, p2)]
        if printed != e.label:
            out.append(TableDiscrepancy(p1, p2, printed, e.label))
    return out


# -- basis decompositions ---------------------------------------------------

Term = tuple[str, str, str]  # (P1 label, P2 label, P3 label)

# Printed regroupings of the triplet, keyed by basis assignment; every term
# carries coefficient 1/2.
REFERENCE_DECOMPOSITIONS: dict[str, list[Term]] = {
    "XXX": [("x+", "x+", "x+"), ("x-", "x-", "x+"), ("x+", "x-", "x-"), ("x-", "x+", "x-")],
    "YYX": [("y+", "y-", "x+"), ("y-", "y+", "x+"), ("x+", "x-", "x-"), ("x-", "x+", "x-")],
    "YXY": [("y+", "x-", "y+"), ("y-", "x-", "y+"), ("y+", "x+", "y-"), ("y-", "x-", "y-")],
    "XYY": [("x+", "y-", "y+"), ("x-", "y+", "y+"), ("x+", "y+", "y-"), ("x-", "y-", "y-")],
}
REFERENCE_COEFFICIENT = 0.5


@dataclass
class Decomposition:
    combo: BasisCombo
    terms: dict  # Term -> complex coefficient
    grouping: dict  # P3 label -> list of (P1, P2) labels
    printed: list
    matched: list
    missing: list  # derived but not printed
    spurious: list  # printed but not derived
    coefficient_mismatch: list
    reconstruction_error: float
    printed_reconstruction_error: float

    @property
    def matches_printed(self) -> bool:
        return not (self.missing or self.spurious or self.coefficient_mismatch)

    def to_dict(self) -> dict:
        def coef(c):
            return {"re": float(c.real), "im": float(c.imag)}
        return {
            "basis_assignment": str(self.combo),
            "derived_terms": [{"p1": t[0], "p2": t[1], "p3": t[2], "coefficient": coef(c)}
                              for t, c in self.terms.items()],
            "grouping": self.grouping,
            "matches_printed": self.matches_printed,
            "missing_terms": [list(t) for t in self.missing],
            "spurious_terms": [list(t) for t in self.spurious],
            "coefficient_mismatch": [list(t) for t in self.coefficient_mismatch],
            "reconstruction_error": self.reconstruction_error,
            "printed_reconstruction_error": self.printed_reconstruction_error,
        }


@dataclass
class DecompositionReport:
    decompositions: list = field(default_factory=list)

    def __getitem__(self, key: str) -> Decomposition:
        for d in self.decompositions:
            if str(d.combo) == key:
                return d
        raise KeyError(key)

    @property
    def mismatched(self) -> list[str]:
        return [str(d.combo) for d in self.decompositions if not d.matches_printed]

    def to_dict(self) -> dict:
        return {"decompositions": [d.to_dict() for d in self.decompositions]}


def _product_vector(labels) -> np.ndarray:
    vec = np.ones(1, dtype=complex)
    for lab in labels:  # lowest qubit first
        vec = np.kron(eigenvector(*parse_label(lab)), vec)
    return vec


def _expand(terms: dict) -> np.ndarray:
    out = np.zeros(8, dtype=complex)
    for t, c in terms.items():
        out += c * _product_vector(t)
    return out


def decompose(combo: BasisCombo, printed: list | None = None) -> Decomposition:
    """Expand the triplet in the product eigenbasis of ``combo``."""
    psi = ghz_triplet().amps
    terms = {}
    for outs in itertools.product(OUTCOMES, repeat=3):
        t = tuple(label(b, o) for b, o in zip((combo.b1, combo.b2, combo.b3), outs))
        c = complex(np.vdot(_product_vector(t), psi))
        if abs(c) > NORM_TOL:
            terms[t] = c
    grouping: dict = {}
    for t in terms:
        grouping.setdefault(t[2], []).append([t[0], t[1]])
    printed = list(printed or [])
    derived_set, printed_set = set(terms), set(printed)
    coef_bad = [t for t in terms if t in printed_set
                and abs(terms[t] - REFERENCE_COEFFICIENT) > NORM_TOL]
    printed_terms = {t: REFERENCE_COEFFICIENT for t in printed}
    return Decomposition(
        combo=combo,
        terms=terms,
        grouping=grouping,
        printed=printed,
        matched=[t for t in printed if t in derived_set],
        missing=[t for t in terms if t not in printed_set],
        spurious=[t for t in printed if t not in derived_set],
        coefficient_mismatch=coef_bad,
        reconstruction_error=float(np.max(np.abs(_expand(terms) - psi))),
        printed_reconstruction_error=(float(np.max(np.abs(_expand(printed_terms) - psi)))
                                      if printed else float("nan")),
    )


def verify_decompositions(reference: dict | None = None) -> DecompositionReport:
    reference = REFERENCE_DECOMPOSITIONS if reference is None else reference
    report = DecompositionReport()
    for key, printed in reference.items():
        report.decompositions.append(decompose(BasisCombo.parse(key), printed))
    return report
