"""Exact small-dimension quantum states.

Qubit ``q`` is bit ``q`` of the amplitude index (qubit 0 is the lowest-order
bit). In the protocol the labels are fixed: qubit 0 = P1, qubit 1 = P2,
qubit 2 = P3, qubit 3 = eavesdropper ancilla. Bit value 0 is ``|z+>`` and
bit value 1 is ``|z->``.

For cat states the complement of a z-basis label is taken as the bit
complement, i.e. the all-zeros string pairs with the all-ones string.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12
NORM_TOL = 1e-12
EIG_FLOOR = -1e-10
# conditioning on an event below this probability is rejected
IMPOSSIBLE_TOL = 1e-14

SQRT1_2 = 1.0 / np.sqrt(2.0)


class QuantumStateError(ValueError):
    """Invalid state, index, or size."""


class ImpossibleEventError(QuantumStateError):
    """Conditioning on an event that has zero probability."""


class Basis(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"

    def __str__(self) -> str:
        return self.value


class Outcome(enum.IntEnum):
    PLUS = 1
    MINUS = -1

    @property
    def sign(self) -> str:
        return "+" if self is Outcome.PLUS else "-"

    def __mul__(self, other):
        if isinstance(other, Outcome):
            return Outcome(int(self) * int(other))
        return int(self) * other

    __rmul__ = __mul__


def label(basis: Basis, outcome: Outcome) -> str:
    """Short eigenstate label such as ``"x+"`` or ``"y-"``."""
    return f"{basis.value}{outcome.sign}"


def parse_label(text: str) -> tuple[Basis, Outcome]:
    text = text.strip().lower()
    if len(text) != 2 or text[1] not in "+-":
        raise QuantumStateError(f"bad eigenstate label {text!r}")
    return Basis(text[0]), Outcome.PLUS if text[1] == "+" else Outcome.MINUS


def eigenvector(basis: Basis, outcome: Outcome) -> np.ndarray:
    """Raw 2-vector of the eigenstate (z+ component first)."""
    s = int(outcome)
    if basis is Basis.X:
        return np.array([SQRT1_2, s * SQRT1_2], dtype=complex)
    if basis is Basis.Y:
        return np.array([SQRT1_2, s * 1j * SQRT1_2], dtype=complex)
    if basis is Basis.Z:
        return np.array([1.0, 0.0] if s == 1 else [0.0, 1.0], dtype=complex)
    raise QuantumStateError(f"unknown basis {basis!r}")


def _check_size(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise QuantumStateError(f"qubit count {n} outside 1..{MAX_QUBITS}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over ``n_qubits`` qubits."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** self.n_qubits:
            raise QuantumStateError(
                f"{amps.shape[0]} amplitudes for {self.n_qubits} qubits")
        if not np.all(np.isfinite(amps)):
            raise QuantumStateError("non-finite amplitude")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise QuantumStateError(f"state not normalized (norm^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else 0
        if normalize:
            norm = np.sqrt(np.vdot(amps, amps).real)
            if norm == 0:
                raise QuantumStateError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amps, other.amps))

    def allclose(self, other: "StateVector", tol: float = NORM_TOL) -> bool:
        return (self.n_qubits == other.n_qubits
                and bool(np.max(np.abs(self.amps - other.amps)) <= tol))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, amps={np.round(self.amps, 6)!r})"


@dataclass(frozen=True, eq=False)
class DensityLikeState:
    """Density matrix of a (possibly mixed) state, same qubit ordering."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise QuantumStateError(f"density shape {rho.shape} for dim {self.dim}")
        if self.dim & (self.dim - 1) or self.dim < 2:
            raise QuantumStateError(f"dim {self.dim} is not a power of two")
        if not np.all(np.isfinite(rho)):
            raise QuantumStateError("non-finite density entry")
        if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
            raise QuantumStateError("density matrix not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > NORM_TOL:
            raise QuantumStateError(f"density trace {tr!r} != 1")
        if np.min(np.linalg.eigvalsh(rho)) < EIG_FLOOR:
            raise QuantumStateError("density matrix has a negative eigenvalue")
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityLikeState":
        a = state.amps
        return cls(a.shape[0], np.outer(a, a.conj()))

    @classmethod
    def mixture(cls, components: Iterable[tuple[float, StateVector]]) -> "DensityLikeState":
        rho = None
        for w, s in components:
            term = w * np.outer(s.amps, s.amps.conj())
            rho = term if rho is None else rho + term
        if rho is None:
            raise QuantumStateError("empty mixture")
        return cls(rho.shape[0], rho)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def entropy(self) -> float:
        """Von Neumann entropy in bits."""
        ev = self.eigenvalues()
        ev = ev[ev > 1e-15]
        return float(-np.sum(ev * np.log2(ev)))

    def allclose(self, other, tol: float = NORM_TOL) -> bool:
        other = np.asarray(getattr(other, "entries", other))
        return other.shape == self.entries.shape and bool(
            np.max(np.abs(self.entries - other)) <= tol)


# -- constructors -----------------------------------------------------------

def eigenstate(basis: Basis, outcome: Outcome) -> StateVector:
    return StateVector(1, eigenvector(basis, outcome))


def cat_state(n: int, sign: int | str = +1) -> StateVector:
    """``(|0...0> +/- |1...1>)/sqrt(2)`` on ``n`` qubits."""
    _check_size(n)
    if sign in ("+", 1, +1):
        s = 1.0
    elif sign in ("-", -1):
        s = -1.0
    else:
        raise QuantumStateError(f"cat sign must be + or -, got {sign!r}")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] += SQRT1_2
    amps[-1] += s * SQRT1_2
    return StateVector(n, amps)


def ghz_triplet() -> StateVector:
    return cat_state(3, +1)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Composite state with ``a`` on the low qubits and ``b`` above them."""
    n = a.n_qubits + b.n_qubits
    if n > MAX_QUBITS:
        raise QuantumStateError(f"tensor of {n} qubits exceeds {MAX_QUBITS}")
    # index = ia + 2**na * ib
    return StateVector(n, np.outer(b.amps, a.amps).reshape(-1))


def product_state(factors: Sequence[StateVector]) -> StateVector:
    out = factors[0]
    for f in factors[1:]:
        out = tensor(out, f)
    return out


# -- internal tensor helpers ------------------------------------------------

def _check_qubit(state, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise QuantumStateError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def _split(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    # view with axis 1 = qubit q
    return amps.reshape(2 ** (n - 1 - q), 2, 2 ** q)


def _project(amps: np.ndarray, n: int, q: int, vec: np.ndarray) -> np.ndarray:
    """Unnormalized ``(|e><e|)_q`` applied to ``amps``."""
    t = _split(amps, n, q)
    c = vec[0].conjugate() * t[:, 0, :] + vec[1].conjugate() * t[:, 1, :]
    out = np.empty_like(t)
    out[:, 0, :] = vec[0] * c
    out[:, 1, :] = vec[1] * c
    return out.reshape(-1)


def _projector(basis: Basis, outcome: Outcome) -> np.ndarray:
    e = eigenvector(basis, outcome)
    return np.outer(e, e.conj())


def _apply_local(rho: np.ndarray, n: int, q: int, op: np.ndarray) -> np.ndarray:
    """``op_q rho op_q^dagger`` for a density matrix."""
    t = rho.reshape([2] * (2 * n))
    ax_row, ax_col = n - 1 - q, 2 * n - 1 - q
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [ax_row])), 0, ax_row)
    t = np.moveaxis(np.tensordot(op.conj(), t, axes=([1], [ax_col])), 0, ax_col)
    return t.reshape(rho.shape)


# -- gates ------------------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def apply_unitary(state: StateVector, qubits: Sequence[int], matrix) -> StateVector:
    """Apply ``matrix`` to ``qubits``; ``qubits[0]`` is the low bit of its index."""
    qubits = list(qubits)
    for q in qubits:
        _check_qubit(state, q)
    if len(set(qubits)) != len(qubits):
        raise QuantumStateError("repeated qubit in unitary target")
    k = len(qubits)
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2 ** k, 2 ** k):
        raise QuantumStateError(f"matrix shape {m.shape} for {k} qubits")
    if np.max(np.abs(m.conj().T @ m - np.eye(2 ** k))) > 1e-10:
        raise QuantumStateError("matrix is not unitary")
    n = state.n_qubits
    t = state.amps.reshape([2] * n)
    # matrix index bits: qubits[0] lowest -> reshape axes (qubits[-1], ..., qubits[0])
    axes = [n - 1 - q for q in reversed(qubits)]
    mt = m.reshape([2] * (2 * k))
    t = np.tensordot(mt, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return StateVector(n, t.reshape(-1))


def apply_pauli(state: StateVector, qubit: int, which: str) -> StateVector:
    return apply_unitary(state, [qubit], PAULI[which])


# -- measurement ------------------------------------------------------------

def outcome_probabilities(state, qubit: int, basis: Basis) -> tuple[float, float]:
    """Born probabilities ``(p_plus, p_minus)`` of measuring ``qubit`` in ``basis``."""
    _check_qubit(state, qubit)
    if isinstance(state, DensityLikeState):
        probs = [float(np.trace(_apply_local(state.entries, state.n_qubits, qubit,
                                             _projector(basis, o))).real)
                 for o in (Outcome.PLUS, Outcome.MINUS)]
    else:
        probs = []
        for o in (Outcome.PLUS, Outcome.MINUS):
            v = _project(state.amps, state.n_qubits, qubit, eigenvector(basis, o))
            probs.append(float(np.vdot(v, v).real))
    total = probs[0] + probs[1]
    return probs[0] / total, probs[1] / total


def measure(state: StateVector, qubit: int, basis: Basis, rng) -> tuple[Outcome, StateVector]:
    """Projective measurement; ``rng`` needs a ``random()`` method returning [0, 1).

    One uniform is drawn: the outcome is PLUS iff it falls below ``p_plus``.
    """
    _check_qubit(state, qubit)
    u = rng.random()
    n = state.n_qubits
    vp = _project(state.amps, n, qubit, eigenvector(basis, Outcome.PLUS))
    p_plus = float(np.vdot(vp, vp).real)
    if u < p_plus:
        return Outcome.PLUS, StateVector(n, vp / np.sqrt(p_plus))
    vm = _project(state.amps, n, qubit, eigenvector(basis, Outcome.MINUS))
    p_minus = float(np.vdot(vm, vm).real)
    if p_minus <= 0.0:
        return Outcome.PLUS, StateVector(n, vp / np.sqrt(p_plus))
    return Outcome.MINUS, StateVector(n, vm / np.sqrt(p_minus))


def collapse(state: StateVector, qubit: int, basis: Basis,
             outcome: Outcome) -> tuple[float, StateVector]:
    """Probability of ``outcome`` and the normalized post-measurement state."""
    _check_qubit(state, qubit)
    v = _project(state.amps, state.n_qubits, qubit, eigenvector(basis, outcome))
    p = float(np.vdot(v, v).real)
    if p < IMPOSSIBLE_TOL:
        raise ImpossibleEventError(f"outcome {label(basis, outcome)} has probability {p:.3g}")
    return p, StateVector(state.n_qubits, v / np.sqrt(p))


MeasuredSpec = Sequence[tuple[int, Basis, Outcome]]


def _check_disjoint(state, measured: MeasuredSpec, keep: Sequence[int]) -> None:
    mq = [m[0] for m in measured]
    for q in list(mq) + list(keep):
        _check_qubit(state, q)
    if len(set(mq)) != len(mq) or len(set(keep)) != len(keep):
        raise QuantumStateError("duplicate qubit in measured/keep lists")
    if set(mq) & set(keep):
        raise QuantumStateError("measured and kept qubits overlap")


def _reduce_pure(amps: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    t = amps.reshape([2] * n)
    # output index bit k <-> keep[k]; C-order wants the highest output bit first
    keep_axes = [n - 1 - q for q in reversed(keep)]
    rest = [a for a in range(n) if a not in keep_axes]
    m = np.transpose(t, keep_axes + rest).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def _reduce_density(rho: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    t = rho.reshape([2] * (2 * n))
    keep_axes = [n - 1 - q for q in reversed(keep)]
    rest = [a for a in range(n) if a not in keep_axes]
    perm = keep_axes + rest + [n + a for a in keep_axes] + [n + a for a in rest]
    k = 2 ** len(keep)
    r = 2 ** len(rest)
    t = np.transpose(t, perm).reshape(k, r, k, r)
    return np.einsum("ajbj->ab", t)


def _conditioned(state, measured: MeasuredSpec):
    """Unnormalized post-selection on the listed results, plus its probability."""
    n = state.n_qubits
    if isinstance(state, DensityLikeState):
        rho = state.entries
        for q, b, o in measured:
            rho = _apply_local(rho, n, q, _projector(b, o))
        return rho, float(np.trace(rho).real)
    amps = state.amps
    for q, b, o in measured:
        amps = _project(amps, n, q, eigenvector(b, o))
    return amps, float(np.vdot(amps, amps).real)


def event_probability(state, measured: MeasuredSpec) -> float:
    """Joint probability of the listed measurement results."""
    _check_disjoint(state, measured, [])
    return max(_conditioned(state, measured)[1], 0.0)


def conditional_subsystem_state(state, measured: MeasuredSpec,
                                keep: Sequence[int]) -> DensityLikeState:
    """Normalized reduced state of ``keep`` given the listed measurement results.

    Output qubit ``k`` is input qubit ``keep[k]``. With nothing measured this
    is the partial trace.
    """
    _check_disjoint(state, measured, keep)
    if not keep:
        raise QuantumStateError("keep list is empty")
    data, prob = _conditioned(state, measured)
    if prob < IMPOSSIBLE_TOL:
        raise ImpossibleEventError(f"conditioning event has probability {prob:.3g}")
    n = state.n_qubits
    if isinstance(state, DensityLikeState):
        red = _reduce_density(data, n, keep)
    else:
        red = _reduce_pure(data, n, keep)
    red = red / prob
    red = (red + red.conj().T) / 2
    return DensityLikeState(red.shape[0], red)


def partial_trace(state, keep: Sequence[int]) -> DensityLikeState:
    return conditional_subsystem_state(state, [], keep)


def holevo_quantity(ensemble: Iterable[tuple[float, DensityLikeState]]) -> float:
    """``S(sum p rho) - sum p S(rho)`` in bits, skipping zero-weight members."""
    members = [(p, r) for p, r in ensemble if p > 0]
    if not members:
        return 0.0
    total = sum(p for p, _ in members)
    avg = sum(p * r.entries for p, r in members) / total
    avg = (avg + avg.conj().T) / 2
    chi = DensityLikeState(avg.shape[0], avg).entropy()
    chi -= sum(p * r.entropy() for p, r in members) / total
    return max(chi, 0.0)
