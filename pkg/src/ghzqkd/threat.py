"""Channel imperfections and eavesdropper strategies acting on P2.

Two layers live here: per-round operations on :class:`StateVector` used by
the reference engine, and an exact density-matrix analysis of each attack
(detection probability, Holevo bounds on Eve's knowledge).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .ghzcorr import OUTCOMES, VALID_COMBOS, XY, infer_partner_outcome, parity_target
from .qcore import (
    Basis,
    DensityLikeState,
    Outcome,
    StateVector,
    apply_pauli,
    apply_unitary,
    collapse,
    conditional_subsystem_state,
    eigenstate,
    eigenvector,
    event_probability,
    ghz_triplet,
    holevo_quantity,
    label,
    measure,
    outcome_probabilities,
    tensor,
)

P1, P2, P3, ANCILLA = 0, 1, 2, 3
PAULI_NAMES = ("I", "X", "Y", "Z")


class UnsupportedAttackError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    loss_prob: float = 0.0
    depolarize_prob: float = 0.0

    def __post_init__(self):
        for name in ("loss_prob", "depolarize_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"channel.{name} = {v} outside [0, 1]")

    @property
    def is_identity(self) -> bool:
        return self.loss_prob == 0.0 and self.depolarize_prob == 0.0


# -- strategies -------------------------------------------------------------

@dataclass(frozen=True)
class NoEve:
    name = "none"
    kernel_mode = _kernel.EVE_NONE

    def describe(self) -> dict:
        return {"strategy": self.name}


@dataclass(frozen=True)
class InterceptResend:
    """Measure P2 in X with probability ``x_prob`` (else Y), resend the eigenstate."""

    x_prob: float = 0.5
    name = "intercept_resend"
    kernel_mode = _kernel.EVE_INTERCEPT

    def __post_init__(self):
        if not 0.0 <= self.x_prob <= 1.0:
            raise ValueError(f"eve.x_prob = {self.x_prob} outside [0, 1]")

    def describe(self) -> dict:
        return {"strategy": self.name, "x_prob": self.x_prob}


def _controlled_rotation(strength: float, axis: Basis) -> np.ndarray:
    """P2-controlled rotation of the ancilla; local index = bit(P2) + 2*bit(ancilla).

    When P2 is in the ``axis`` minus-eigenstate the ancilla is rotated
    ``|0> -> cos(t)|0> + sin(t)|1>`` with ``t = strength * pi/2``; strength 1
    is a controlled NOT.
    """
    t = strength * math.pi / 2
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=complex)
    plus = np.outer(eigenvector(axis, Outcome.PLUS), eigenvector(axis, Outcome.PLUS).conj())
    minus = np.outer(eigenvector(axis, Outcome.MINUS), eigenvector(axis, Outcome.MINUS).conj())
    # kron(ancilla_op, p2_op) matches the local index convention
    return np.kron(np.eye(2), plus) + np.kron(rot, minus)


@dataclass(frozen=True, eq=False)
class EntangleAncilla:
    """Unitary ``U`` on (P2, ancilla) with the ancilla starting in ``ancilla``."""

    unitary: np.ndarray
    ancilla: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0], dtype=complex))
    strength: float | None = None
    axis: Basis | None = None
    name = "entangle_ancilla"
    kernel_mode = _kernel.EVE_ANCILLA

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        a = np.asarray(self.ancilla, dtype=complex).reshape(-1)
        if u.shape != (4, 4):
            raise ValueError(f"ancilla unitary must be 4x4, got {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(4))) > 1e-10:
            raise ValueError("ancilla attack matrix is not unitary")
        if a.shape != (2,) or abs(np.vdot(a, a).real - 1.0) > 1e-12:
            raise ValueError("initial ancilla must be a normalized 2-vector")
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "ancilla", a)

    @classmethod
    def controlled_rotation(cls, strength: float, axis: Basis = Basis.Z) -> "EntangleAncilla":
        if not 0.0 <= strength <= 1.0:
            raise ValueError(f"eve.strength = {strength} outside [0, 1]")
        return cls(_controlled_rotation(strength, axis), strength=strength, axis=axis)

    @classmethod
    def identity(cls) -> "EntangleAncilla":
        return cls(np.eye(4, dtype=complex), strength=0.0, axis=Basis.Z)

    def describe(self) -> dict:
        d = {"strategy": self.name}
        if self.strength is not None:
            d.update(strength=self.strength, axis=self.axis.value)
        return d


EveStrategy = NoEve | InterceptResend | EntangleAncilla


def make_strategy(name: str, **params) -> EveStrategy:
    name = name.strip().lower()
    if name in ("none", ""):
        return NoEve()
    if name == "intercept_resend":
        return InterceptResend(x_prob=float(params.get("x_prob", 0.5)))
    if name == "entangle_ancilla":
        axis = params.get("axis", Basis.Z)
        if isinstance(axis, str):
            try:
                axis = Basis(axis.strip().lower())
            except ValueError:
                raise ValueError(f"eve.axis = {axis!r} is not one of x, y, z") from None
        return EntangleAncilla.controlled_rotation(float(params.get("strength", 1.0)), axis)
    if name in ("mitm", "man_in_the_middle"):
        raise UnsupportedAttackError(
            "eve.strategy: man-in-the-middle is not modeled: the protocol does not authenticate the "
            "classical channel, so impersonation is out of scope for this simulator")
    raise UnsupportedAttackError(f"eve.strategy: unknown eavesdropper strategy {name!r}")


def kernel_args(strategy: EveStrategy) -> tuple:
    """Eve-related positional arguments of ``_kernel.simulate_rounds``."""
    x_prob = strategy.x_prob if isinstance(strategy, InterceptResend) else 0.5
    if isinstance(strategy, EntangleAncilla):
        u, a = strategy.unitary, strategy.ancilla
    else:
        u, a = np.eye(4, dtype=complex), np.array([1.0, 0.0], dtype=complex)
    return (strategy.kernel_mode, x_prob, np.ascontiguousarray(u.real),
            np.ascontiguousarray(u.imag), np.ascontiguousarray(a.real),
            np.ascontiguousarray(a.imag))


# -- per-round operations (reference engine) -------------------------------

@dataclass(frozen=True)
class EveRecord:
    basis: Basis
    outcome: Outcome


@dataclass(frozen=True)
class TransmitResult:
    state: StateVector
    lost: bool
    pauli: str | None  # applied error, None when no depolarizing event


def transmit_p2(state: StateVector, cfg: ChannelConfig, rng) -> TransmitResult:
    """Loss and depolarizing noise on P2; draws three uniforms (loss, event, Pauli)."""
    u_loss, u_depol, u_pauli = rng.random(), rng.random(), rng.random()
    if u_loss < cfg.loss_prob:
        return TransmitResult(state, True, None)
    if u_depol < cfg.depolarize_prob:
        which = PAULI_NAMES[min(int(u_pauli * 4.0), 3)]
        return TransmitResult(apply_pauli(state, P2, which), False, which)
    return TransmitResult(state, False, None)


def intercept_resend(state: StateVector, strategy: InterceptResend, rng):
    """Eve measures P2 and forwards the eigenstate she found; draws two uniforms."""
    basis = Basis.X if rng.random() < strategy.x_prob else Basis.Y
    outcome, post = measure(state, P2, basis, rng)
    return post, EveRecord(basis, outcome)


def with_ancilla(state: StateVector, strategy: EntangleAncilla) -> StateVector:
    full = tensor(state, StateVector(1, strategy.ancilla))
    return apply_unitary(full, [P2, ANCILLA], strategy.unitary)


# -- ancilla decomposition --------------------------------------------------

# GHZ-allowed X-basis branches (P1, P2, P3) and their ancilla component names
ANCILLA_BRANCHES = {
    "A1": (Outcome.PLUS, Outcome.PLUS, Outcome.PLUS),
    "A2": (Outcome.MINUS, Outcome.MINUS, Outcome.PLUS),
    "A3": (Outcome.PLUS, Outcome.MINUS, Outcome.MINUS),
    "A4": (Outcome.MINUS, Outcome.PLUS, Outcome.MINUS),
}


@dataclass
class AncillaDecomposition:
    state: StateVector
    components: dict  # name -> ancilla 2-vector, scaled so the identity attack gives |A>
    residual: dict  # GHZ-forbidden X branches -> ancilla 2-vector, same scaling
    residual_norm: float

    @property
    def admits_branch_form(self) -> bool:
        """True when only the four GHZ-allowed X branches carry weight."""
        return self.residual_norm < 1e-12


def _xxx_vector(outs) -> np.ndarray:
    vec = np.ones(1, dtype=complex)
    for o in outs:
        vec = np.kron(eigenvector(Basis.X, o), vec)
    return vec


def _ancilla_component(state: StateVector, outs) -> np.ndarray:
    # 2 * (<x o1|<x o2|<x o3| (x) I) |Psi>
    t = state.amps.reshape(2, 8)  # row = ancilla bit
    return 2.0 * (t @ _xxx_vector(outs).conj())


def entangle_ancilla(params: EntangleAncilla) -> AncillaDecomposition:
    """``U (GHZ (x) |A>)`` with its ancilla component on each X-basis branch."""
    state = with_ancilla(ghz_triplet(), params)
    comps = {k: _ancilla_component(state, outs) for k, outs in ANCILLA_BRANCHES.items()}
    allowed = set(ANCILLA_BRANCHES.values())
    residual = {tuple(label(Basis.X, o) for o in outs): _ancilla_component(state, outs)
                for outs in itertools.product(OUTCOMES, repeat=3) if outs not in allowed}
    # each component carries amplitude 1/2 of the expansion
    rnorm = math.sqrt(sum(float(np.vdot(v, v).real) for v in residual.values()) / 4.0)
    return AncillaDecomposition(state, comps, residual, rnorm)


def project_alice_bob(decomp: AncillaDecomposition, alphas) -> np.ndarray:
    """Unnormalized (P3, ancilla) state after projecting P1, P2 onto
    ``a1|x+x+> + a2|x-x-> + a3|x+x-> + a4|x-x+>``.

    Output index = bit(P3) + 2 * bit(ancilla).
    """
    pairs = [(Outcome.PLUS, Outcome.PLUS), (Outcome.MINUS, Outcome.MINUS),
             (Outcome.PLUS, Outcome.MINUS), (Outcome.MINUS, Outcome.PLUS)]
    phi = sum(a * np.kron(eigenvector(Basis.X, o2), eigenvector(Basis.X, o1))
              for a, (o1, o2) in zip(alphas, pairs))
    t = decomp.state.amps.reshape(4, 4)  # row = bit(P3) + 2*bit(A), col = bit(P1) + 2*bit(P2)
    return t @ phi.conj()


# -- exact attack analysis --------------------------------------------------

@dataclass
class AttackModel:
    """Exact post-channel state of (P1, P2, P3, Eve registers)."""

    rho: DensityLikeState
    eve_qubits: tuple[int, ...]


def _branches(strategy: EveStrategy):
    """Pure branches (weight, state) after Eve acts on P2, Eve registers included."""
    ghz = ghz_triplet()
    if isinstance(strategy, NoEve):
        return [(1.0, ghz)], ()
    if isinstance(strategy, EntangleAncilla):
        return [(1.0, with_ancilla(ghz, strategy))], (ANCILLA,)
    if isinstance(strategy, InterceptResend):
        out = []
        for basis, pb in ((Basis.X, strategy.x_prob), (Basis.Y, 1.0 - strategy.x_prob)):
            if pb == 0.0:
                continue
            for o in OUTCOMES:
                p, post = collapse(ghz, P2, basis, o)
                # register qubits: (basis bit, outcome bit)
                reg = tensor(eigenstate(Basis.Z, Outcome.PLUS if basis is Basis.X else Outcome.MINUS),
                             eigenstate(Basis.Z, o))
                out.append((pb * p, tensor(post, reg)))
        return out, (3, 4)
    raise UnsupportedAttackError(f"no exact model for {strategy!r}")


def attack_model(strategy: EveStrategy, channel: ChannelConfig | None = None) -> AttackModel:
    channel = channel or ChannelConfig()
    branches, eve_q = _branches(strategy)
    p = channel.depolarize_prob
    comps = []
    for w, s in branches:
        if w == 0.0:
            continue
        if p < 1.0:
            comps.append(((1.0 - p) * w, s))
        if p > 0.0:
            comps.extend((p * w / 4.0, apply_pauli(s, P2, name)) for name in PAULI_NAMES)
    return AttackModel(DensityLikeState.mixture(comps), eve_q)


def _combo_probs(rho, combo):
    return {outs: event_probability(rho, [(P1, combo.b1, outs[0]), (P2, combo.b2, outs[1]),
                                          (P3, combo.b3, outs[2])])
            for outs in itertools.product(OUTCOMES, repeat=3)}


def violation_probability(model: AttackModel, combo=None) -> float:
    """Probability a tested round fails the parity check (averaged over combos)."""
    combos = [combo] if combo is not None else VALID_COMBOS
    total = 0.0
    for c in combos:
        target = int(parity_target(c))
        total += sum(p for outs, p in _combo_probs(model.rho, c).items()
                     if int(outs[0]) * int(outs[1]) * int(outs[2]) != target)
    return total / len(combos)


def key_error_probability(model: AttackModel) -> float:
    """Probability that Alice's inferred bit differs from Bob's on a key round."""
    total = 0.0
    for c in VALID_COMBOS:
        for (o1, o2, o3), p in _combo_probs(model.rho, c).items():
            if infer_partner_outcome(c.b1, o1, c.b3, o3, c.b2) is not o2:
                total += p
    return total / len(VALID_COMBOS)


def _conditional_ensemble(rho, events_by_value, keep):
    """[(p(value), rho_keep | value)] where each value is a union of disjoint events."""
    ens = []
    for events in events_by_value:
        weighted = []
        for ev in events:
            pe = event_probability(rho, ev)
            if pe > 1e-15:
                weighted.append((pe, conditional_subsystem_state(rho, ev, keep)))
        pv = sum(w for w, _ in weighted)
        if pv <= 0:
            continue
        mix = sum(w * s.entries for w, s in weighted) / pv
        ens.append((pv, DensityLikeState(mix.shape[0], (mix + mix.conj().T) / 2)))
    return ens


def eve_bob_information(model: AttackModel, bases=None) -> float:
    """Holevo bound (bits) on Eve's knowledge of Bob's bit, averaged over ``bases``."""
    if not model.eve_qubits:
        return 0.0
    bases = [c.b2 for c in VALID_COMBOS] if bases is None else list(bases)
    keep = list(model.eve_qubits)
    chis = []
    for b2 in bases:
        events = [[[(P2, b2, o)]] for o in OUTCOMES]
        chis.append(holevo_quantity(_conditional_ensemble(model.rho, events, keep)))
    return float(np.mean(chis))


def eve_alice_information(model: AttackModel) -> float:
    """Holevo bound on Eve's knowledge of Alice's key bit (her inferred P2 value)."""
    if not model.eve_qubits:
        return 0.0
    keep = list(model.eve_qubits)
    chis = []
    for c in VALID_COMBOS:
        by_value = {o: [] for o in OUTCOMES}
        for o1, o3 in itertools.product(OUTCOMES, repeat=2):
            inferred = infer_partner_outcome(c.b1, o1, c.b3, o3, c.b2)
            by_value[inferred].append([(P1, c.b1, o1), (P3, c.b3, o3)])
        chis.append(holevo_quantity(_conditional_ensemble(model.rho, by_value.values(), keep)))
    return float(np.mean(chis))


@dataclass
class AttackReport:
    detection_rate_per_tested_round: float
    qber_on_key: float
    eve_bob_mutual_information: float
    eve_alice_mutual_information: float
    empirical_detection_rate: float | None = None

    def to_dict(self) -> dict:
        d = {
            "detection_rate_per_tested_round": self.detection_rate_per_tested_round,
            "qber_on_key": self.qber_on_key,
            "eve_bob_mutual_information": self.eve_bob_mutual_information,
            "eve_alice_mutual_information": self.eve_alice_mutual_information,
        }
        if self.empirical_detection_rate is not None:
            d["empirical_detection_rate"] = self.empirical_detection_rate
        return d


def _clean(x: float) -> float:
    # collapse float dust so exact zeros print as zeros
    return 0.0 if abs(x) < 1e-13 else float(x)


def eve_information(strategy: EveStrategy, channel: ChannelConfig | None = None,
                    n_rounds: int = 0, seed: int = 0) -> AttackReport:
    """Exact attack figures; with ``n_rounds`` > 0 also a seeded empirical detection rate."""
    model = attack_model(strategy, channel)
    report = AttackReport(
        detection_rate_per_tested_round=_clean(violation_probability(model)),
        qber_on_key=_clean(key_error_probability(model)),
        eve_bob_mutual_information=_clean(eve_bob_information(model)),
        eve_alice_mutual_information=_clean(eve_alice_information(model)),
    )
    if n_rounds > 0:
        from .protocol import SessionConfig, run_session  # protocol imports threat
        from .postproc import PostprocConfig
        cfg = SessionConfig(n_rounds=n_rounds, seed=seed, channel=channel or ChannelConfig(),
                            eve=strategy, qber_abort_threshold=1.0,
                            postproc=PostprocConfig(enabled=False))
        report.empirical_detection_rate = run_session(cfg).stats.violation_rate
    return report


def ancilla_information(strategy: EveStrategy, basis: Basis) -> float:
    """Holevo bound on what Eve's register reveals about P2 measured in ``basis``."""
    return _clean(eve_bob_information(attack_model(strategy), bases=[basis]))


def public_bit_entropy() -> dict[str, float]:
    """Entropy (bits) of Bob's key bit given public information, per round type.

    Keyed ``"B"`` for rounds where only Bob's announced basis ``B`` is known, and
    ``"ABC"`` when every basis of the combo is assumed known.
    """
    ghz = ghz_triplet()

    def h(p):
        return -sum(x * math.log2(x) for x in p if x > 0)

    out = {}
    for b2 in XY:
        out[b2.value.upper()] = h(outcome_probabilities(ghz, P2, b2))
    for c in VALID_COMBOS:
        p_bob = [sum(event_probability(ghz, [(P1, c.b1, o1), (P2, c.b2, o2), (P3, c.b3, o3)])
                     for o1, o3 in itertools.product(OUTCOMES, repeat=2))
                 for o2 in OUTCOMES]
        out[str(c)] = h(p_bob)
    return out
