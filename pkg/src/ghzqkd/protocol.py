"""Session driver: quantum rounds, Alice/Bob message exchange, sifting and
post-processing.

The GHZ source sits with Alice; only P2 crosses the channel. Quantum rounds
are produced in bulk by the round kernel (or, for cross-checking, round by
round with :mod:`qcore` via ``engine="reference"``). The classical phase then
runs as an explicit exchange between :class:`Alice` and :class:`Bob`:

    loss report -> basis announcements -> Alice measures P3 -> test selection
    -> test reveal -> verdict -> bit mapping -> post-processing
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import ClassVar, Iterator

import numpy as np

from . import _kernel
from . import postproc as pp
from .ghzcorr import check_consistency, infer_partner_outcome, parity_law, third_basis
from .qcore import Basis, Outcome, ghz_triplet, measure
from .threat import (
    ChannelConfig,
    EntangleAncilla,
    EveStrategy,
    InterceptResend,
    NoEve,
    intercept_resend,
    kernel_args,
    transmit_p2,
    with_ancilla,
)

TRANSCRIPT_SCHEMA_VERSION = 1
CHUNK_ROUNDS = 1 << 16
BASES = (Basis.X, Basis.Y)
OUTCOME_CODES = (Outcome.PLUS, Outcome.MINUS)
BITMAPS = ("plus_zero", "plus_one")
_BASIS_CODE = {"x": 0, "y": 1}
_OUTCOME_CODE = {"+": 0, "-": 1}


class ProtocolOrderError(RuntimeError):
    """A protocol step was attempted before the message it depends on."""


@dataclass(frozen=True)
class SessionConfig:
    n_rounds: int = 1000
    test_fraction: float = 0.2
    qber_abort_threshold: float = 0.11
    bitmap: str = "plus_zero"
    seed: int = 0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    eve: EveStrategy = field(default_factory=NoEve)
    postproc: pp.PostprocConfig = field(default_factory=pp.PostprocConfig)

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("session.n_rounds must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"session.test_fraction = {self.test_fraction} outside (0, 1)")
        if self.test_fraction * self.n_rounds < 1.0:
            raise ValueError("session.test_fraction * n_rounds must be >= 1")
        if not 0.0 <= self.qber_abort_threshold <= 1.0:
            raise ValueError(f"session.qber_abort_threshold = {self.qber_abort_threshold} outside [0, 1]")
        if self.bitmap not in BITMAPS:
            raise ValueError(f"session.bitmap must be one of {BITMAPS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("session.seed must be a 64-bit unsigned integer")

    def describe(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "test_fraction": self.test_fraction,
            "qber_abort_threshold": self.qber_abort_threshold,
            "bitmap": self.bitmap,
            "seed": self.seed,
            "channel": {"loss_prob": self.channel.loss_prob,
                        "depolarize_prob": self.channel.depolarize_prob},
            "eve": self.eve.describe(),
            "postproc": {k: getattr(self.postproc, k) for k in (
                "enabled", "qber_sample_fraction", "n_passes", "confirm_rounds",
                "verify_hash_bits", "safety_margin")},
        }


# -- messages ---------------------------------------------------------------

@dataclass(frozen=True)
class Message:
    tag: ClassVar[str]
    sender: ClassVar[str]

    @property
    def round(self):
        return getattr(self, "round_index", None)

    def payload(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "round_index"}
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


@dataclass(frozen=True)
class LossReport(Message):
    rounds: tuple
    tag = "loss_report"
    sender = "bob"


@dataclass(frozen=True)
class BasisAnnounce(Message):
    round_index: int
    basis: str
    tag = "basis"
    sender = "bob"


@dataclass(frozen=True)
class TestReveal(Message):
    round_index: int
    basis: str
    outcome: str
    tag = "test_reveal"
    sender = "bob"


@dataclass(frozen=True)
class TestVerdict(Message):
    accept: bool
    violation_rate: float
    n_tested: int
    n_violations: int
    tag = "verdict"
    sender = "alice"


@dataclass(frozen=True)
class QberSample(Message):
    rounds: tuple
    bob_bits: str  # hex
    tag = "qber_sample"
    sender = "bob"


@dataclass(frozen=True)
class QberEstimate(Message):
    qber: float
    n_sampled: int
    n_mismatch: int
    tag = "qber_estimate"
    sender = "alice"


@dataclass(frozen=True)
class ReconStart(Message):
    seed: int
    n_bits: int
    n_passes: int
    initial_block_size: int
    confirm_rounds: int
    tag = "recon_start"
    sender = "alice"


@dataclass(frozen=True)
class ReconParity(Message):
    pass_index: int
    kind: str
    lo: int
    hi: int
    parity: int
    tag = "recon"
    sender = "alice"


@dataclass(frozen=True)
class KeyCheck(Message):
    seed: int
    n_bits: int
    digest: str
    tag = "key_check"
    sender = "alice"


@dataclass(frozen=True)
class KeyCheckResult(Message):
    ok: bool
    tag = "key_check_result"
    sender = "bob"


@dataclass(frozen=True)
class HashSeed(Message):
    seed: int
    out_len: int
    tag = "pa_seed"
    sender = "alice"


MESSAGE_TYPES = {cls.tag: cls for cls in (
    LossReport, BasisAnnounce, TestReveal, TestVerdict, QberSample, QberEstimate,
    ReconStart, ReconParity, KeyCheck, KeyCheckResult, HashSeed)}


# -- rounds -----------------------------------------------------------------

@dataclass(frozen=True)
class Round:
    index: int
    alice_b1: Basis
    alice_o1: Outcome
    bob_b2: Basis | None  # None when lost
    bob_o2: Outcome | None
    alice_b3: Basis | None
    alice_o3: Outcome | None
    inferred_o2: Outcome | None
    lost: bool
    tested: bool
    consistent: bool | None  # set for tested rounds only


class RoundTable:
    """Columnar per-round results (kernel layout) plus the tested mask."""

    def __init__(self, data: np.ndarray):
        self.data = data
        self.tested = np.zeros(data.shape[0], dtype=bool)
        self._sign = None

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def lost(self) -> np.ndarray:
        return self.data[:, _kernel.LOST].astype(bool)

    def inferred_codes(self) -> np.ndarray:
        """Alice's step-6 inference of Bob's outcome code (0 = plus); -1 when lost."""
        d = self.data.astype(np.int64)
        target = np.array([[int(parity_law()[c]) for c in _combos_for(b1)] for b1 in BASES])
        ok = d[:, _kernel.B2] >= 0
        b2 = np.where(ok, d[:, _kernel.B2], 0)
        sign = target[d[:, _kernel.B1], b2] * (1 - 2 * d[:, _kernel.O1]) * (1 - 2 * np.where(ok, d[:, _kernel.O3], 0))
        return np.where(ok, (1 - sign) // 2, -1)

    def consistent_mask(self) -> np.ndarray:
        d = self.data.astype(np.int64)
        return self.inferred_codes() == d[:, _kernel.O2]

    def round(self, i: int) -> Round:
        row = [int(x) for x in self.data[i]]
        lost = bool(row[_kernel.LOST])

        def basis(code):
            return None if code < 0 else BASES[code]

        def outcome(code):
            return None if code < 0 else OUTCOME_CODES[code]

        b1, o1 = BASES[row[_kernel.B1]], OUTCOME_CODES[row[_kernel.O1]]
        b2, b3, o3 = basis(row[_kernel.B2]), basis(row[_kernel.B3]), outcome(row[_kernel.O3])
        inferred = None if lost else infer_partner_outcome(b1, o1, b3, o3, b2)
        r = Round(
            index=i, alice_b1=b1, alice_o1=o1, bob_b2=b2, bob_o2=outcome(row[_kernel.O2]),
            alice_b3=b3, alice_o3=o3, inferred_o2=inferred, lost=lost,
            tested=bool(self.tested[i]), consistent=None)
        if r.tested:
            r = _with_consistency(r)
        return r


def _with_consistency(r: Round) -> Round:
    ok = check_consistency(r.alice_b1, r.alice_o1, r.bob_b2, r.bob_o2, r.alice_b3, r.alice_o3)
    return Round(**{**r.__dict__, "consistent": ok})


def _combos_for(b1):
    from .ghzcorr import BasisCombo
    return [BasisCombo(b1, b2, third_basis(b1, b2)) for b2 in BASES]


# -- per-round quantum steps (reference engine) -----------------------------

def alice_measure_p1(state, rng):
    """Step 1: uniform basis in {X, Y}, then measure P1; draws two uniforms."""
    basis = Basis.X if rng.random() < 0.5 else Basis.Y
    outcome, post = measure(state, 0, basis, rng)
    return basis, outcome, post


def bob_measure(state, rng):
    """Step 2 on a delivered P2; draws two uniforms."""
    basis = Basis.X if rng.random() < 0.5 else Basis.Y
    outcome, post = measure(state, 1, basis, rng)
    return basis, outcome, post


def alice_measure_p3(state, b1: Basis, announced_b2: Basis | None, rng):
    """Step 4: P3 in the basis fixed by P1's and Bob's announced basis."""
    if announced_b2 is None:
        raise ProtocolOrderError("P3 measured before Bob announced his basis")
    b3 = third_basis(b1, announced_b2)
    outcome, post = measure(state, 2, b3, rng)
    return b3, outcome, post


class _Draws:
    """Feeds preset uniforms to operations expecting ``rng.random()``."""

    def __init__(self, values):
        self._values = iter(values)

    def random(self):
        return float(next(self._values))


def _reference_rounds(u: np.ndarray, cfg: SessionConfig) -> np.ndarray:
    out = np.full((u.shape[0], _kernel.N_OUT), -1, dtype=np.int8)
    eve = cfg.eve
    for r, row in enumerate(u):
        state = ghz_triplet()
        b1, o1, state = alice_measure_p1(state, _Draws(row[0:2]))
        out[r, _kernel.B1] = BASES.index(b1)
        out[r, _kernel.O1] = OUTCOME_CODES.index(o1)
        if isinstance(eve, InterceptResend):
            state, rec = intercept_resend(state, eve, _Draws(row[2:4]))
            out[r, _kernel.EVE_B] = BASES.index(rec.basis)
            out[r, _kernel.EVE_O] = OUTCOME_CODES.index(rec.outcome)
        elif isinstance(eve, EntangleAncilla):
            state = with_ancilla(state, eve)
        tr = transmit_p2(state, cfg.channel, _Draws(row[4:7]))
        out[r, _kernel.LOST] = tr.lost
        if tr.lost:
            continue
        if tr.pauli is not None:
            out[r, _kernel.NOISE] = "IXYZ".index(tr.pauli)
        b2, o2, state = bob_measure(tr.state, _Draws(row[7:9]))
        b3, o3, state = alice_measure_p3(state, b1, b2, _Draws(row[9:10]))
        out[r, _kernel.B2] = BASES.index(b2)
        out[r, _kernel.O2] = OUTCOME_CODES.index(o2)
        out[r, _kernel.B3] = BASES.index(b3)
        out[r, _kernel.O3] = OUTCOME_CODES.index(o3)
    return out


def simulate_quantum(cfg: SessionConfig, rng: np.random.Generator, engine: str = "auto") -> np.ndarray:
    """All rounds of a session in kernel column layout; consumes 10 uniforms per round."""
    chunks = []
    eve = kernel_args(cfg.eve)
    sim = None if engine == "reference" else _kernel.get_backend(engine)
    remaining = cfg.n_rounds
    while remaining:
        m = min(CHUNK_ROUNDS, remaining)
        u = rng.random((m, _kernel.N_UNIFORMS))
        if sim is None:
            chunks.append(_reference_rounds(u, cfg))
        else:
            chunks.append(sim(u, cfg.channel.loss_prob, cfg.channel.depolarize_prob, *eve))
        remaining -= m
    return np.concatenate(chunks)


# -- parties ----------------------------------------------------------------

def select_test_subset(candidates, test_fraction: float, rng) -> np.ndarray:
    """Each candidate round is tested independently with probability ``test_fraction``."""
    candidates = np.asarray(candidates, dtype=np.int64)
    return candidates[rng.random(candidates.size) < test_fraction]


def _bits_from_codes(codes: np.ndarray, bitmap: str) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint8)
    return codes if bitmap == "plus_zero" else (1 - codes).astype(np.uint8)


class Bob:
    """Holds P2's results; speaks only about bases, losses and tested outcomes."""

    def __init__(self, rounds: RoundTable):
        d = rounds.data
        self.lost = d[:, _kernel.LOST].astype(bool)
        self.b2 = d[:, _kernel.B2].astype(np.int64)
        self.o2 = d[:, _kernel.O2].astype(np.int64)
        self.tested = np.zeros(0, dtype=np.int64)

    def loss_report(self) -> LossReport:
        return LossReport(tuple(int(i) for i in np.flatnonzero(self.lost)))

    def delivered(self) -> np.ndarray:
        return np.flatnonzero(~self.lost)

    def announce_bases(self) -> Iterator[BasisAnnounce]:
        for i in self.delivered():
            yield BasisAnnounce(int(i), BASES[self.b2[i]].value)

    def choose_tests(self, fraction: float, rng) -> np.ndarray:
        self.tested = select_test_subset(self.delivered(), fraction, rng)
        return self.tested

    def reveal_tests(self) -> Iterator[TestReveal]:
        for i in self.tested:
            yield TestReveal(int(i), BASES[self.b2[i]].value, "+-"[self.o2[i]])

    def key_bits(self, kept: np.ndarray, bitmap: str) -> np.ndarray:
        return _bits_from_codes(self.o2[kept], bitmap)


class Alice:
    """Holds P1 and P3; never announces her bases or any outcome."""

    def __init__(self, rounds: RoundTable):
        self._rounds = rounds
        d = rounds.data
        self.b1 = d[:, _kernel.B1].astype(np.int64)
        self.o1 = d[:, _kernel.O1].astype(np.int64)
        self.announced = np.full(len(rounds), -1, dtype=np.int64)
        self.b3 = np.full(len(rounds), -1, dtype=np.int64)
        self.o3 = np.full(len(rounds), -1, dtype=np.int64)
        self.lost = np.zeros(len(rounds), dtype=bool)
        self.verdict: TestVerdict | None = None

    def receive_loss_report(self, msg: LossReport) -> None:
        self.lost[list(msg.rounds)] = True

    def receive_bases(self, rounds_idx: np.ndarray, bases: np.ndarray) -> None:
        self.announced[rounds_idx] = bases

    def measure_p3(self) -> None:
        """Step 4 for every announced round."""
        todo = np.flatnonzero(self.announced >= 0)
        d = self._rounds.data
        b3 = np.where(self.b1[todo] == self.announced[todo], 0, 1)
        # the quantum layer measured P3 in exactly this basis
        if np.any(d[todo, _kernel.B3] != b3):
            raise ProtocolOrderError("P3 basis disagrees with the announced bases")
        self.b3[todo] = b3
        self.o3[todo] = d[todo, _kernel.O3]

    def _require_p3(self, idx) -> None:
        if np.any(self.announced[idx] < 0) or np.any(self.o3[idx] < 0):
            raise ProtocolOrderError("P3 result needed before the basis announcement")

    def inferred_codes(self, idx: np.ndarray) -> np.ndarray:
        self._require_p3(idx)
        target = np.array([[int(parity_law()[c]) for c in _combos_for(b1)] for b1 in BASES])
        sign = target[self.b1[idx], self.announced[idx]] * (1 - 2 * self.o1[idx]) * (1 - 2 * self.o3[idx])
        return (1 - sign) // 2

    def check_tests(self, reveals: list[TestReveal], threshold: float) -> TestVerdict:
        """Step 5: fraction of revealed rounds violating the GHZ parity law."""
        idx = np.array([m.round_index for m in reveals], dtype=np.int64)
        if idx.size:
            self._require_p3(idx)
        b2 = np.array([_BASIS_CODE[m.basis] for m in reveals], dtype=np.int64)
        o2 = np.array([_OUTCOME_CODE[m.outcome] for m in reveals], dtype=np.int64)
        if np.any(b2 != self.announced[idx]):
            raise ProtocolOrderError("revealed basis differs from the announced one")
        n_bad = int(np.count_nonzero(self.inferred_codes(idx) != o2)) if idx.size else 0
        rate = n_bad / idx.size if idx.size else 0.0
        self.verdict = TestVerdict(rate <= threshold, rate, int(idx.size), n_bad)
        return self.verdict

    def key_bits(self, kept: np.ndarray, bitmap: str) -> np.ndarray:
        """Step 6: map the inferred Bob outcome through the shared convention."""
        return _bits_from_codes(self.inferred_codes(kept), bitmap)


def eavesdrop_check(alice: Alice, reveals, threshold: float) -> TestVerdict:
    return alice.check_tests(list(reveals), threshold)


@dataclass
class RawKeyPair:
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    rounds: np.ndarray  # kept round indices

    def __len__(self) -> int:
        return int(self.rounds.size)


def map_to_bits(alice: Alice, bob: Bob, kept: np.ndarray, bitmap: str = "plus_zero") -> RawKeyPair:
    kept = np.asarray(kept, dtype=np.int64)
    return RawKeyPair(alice.key_bits(kept, bitmap), bob.key_bits(kept, bitmap), kept)


# -- transcript -------------------------------------------------------------

class Transcript:
    """Ordered public messages plus private party records for one session.

    Bulk message runs are stored as generators and expanded on demand.
    """

    def __init__(self, header: dict):
        self.header = header
        self._entries: list = []
        self.private: list = []  # callables yielding (tag, round, payload)

    def send(self, msg: Message) -> None:
        self._entries.append(msg)

    def send_many(self, factory) -> None:
        self._entries.append(factory)

    def messages(self) -> Iterator[Message]:
        for e in self._entries:
            if isinstance(e, Message):
                yield e
            else:
                yield from e()

    def lines(self, include_private: bool = True) -> Iterator[str]:
        sid = self.header["session"]
        yield _dump({"session": sid, "seq": 0, "channel": "meta", "tag": "session_start",
                     "round": None, **{k: v for k, v in self.header.items() if k != "session"}})
        seq = 1
        for m in self.messages():
            yield _dump({"session": sid, "seq": seq, "channel": "public", "tag": m.tag,
                         "sender": m.sender, "round": m.round, **m.payload()})
            seq += 1
        if include_private:
            for factory in self.private:
                for tag, rnd, payload in factory():
                    yield _dump({"session": sid, "seq": seq, "channel": "private", "tag": tag,
                                 "round": rnd, **payload})
                    seq += 1


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_transcripts(path, transcripts, include_private: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in transcripts:
            for line in t.lines(include_private):
                fh.write(line + "\n")


# -- session ----------------------------------------------------------------

@dataclass
class SessionStats:
    n_rounds: int
    lost: int
    delivered: int
    tested: int
    violations: int
    violation_rate: float
    aborted: bool
    kept: int
    sacrificed: int = 0
    sample_mismatches: int = 0
    qber_estimate: float = 0.0
    raw_qber: float = 0.0
    corrected: int = 0
    recon_leaked: int = 0
    leaked_bits: int = 0
    recon_flips: int = 0
    recon_ok: bool = False
    verify_ok: bool = False
    final_len: int = 0
    final_keys_equal: bool = False


@dataclass
class SessionResult:
    transcript: Transcript
    raw_keys: RawKeyPair
    stats: SessionStats
    rounds: RoundTable
    final_alice: pp.FinalKey | None = None
    final_bob: pp.FinalKey | None = None

    def __iter__(self):
        return iter((self.transcript, self.raw_keys, self.stats))


def _seed_int(rng) -> int:
    return int(rng.integers(0, 2 ** 63))


def run_session(cfg: SessionConfig, session_index: int = 0, engine: str = "auto") -> SessionResult:
    """Execute one seeded session; deterministic in ``cfg`` (including its seed)."""
    q_seq, test_seq, pp_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    rounds = RoundTable(simulate_quantum(cfg, np.random.default_rng(q_seq), engine))
    alice, bob = Alice(rounds), Bob(rounds)
    tr = Transcript({"session": session_index, "schema_version": TRANSCRIPT_SCHEMA_VERSION,
                     "config": cfg.describe()})

    loss = bob.loss_report()
    tr.send(loss)
    alice.receive_loss_report(loss)

    delivered = bob.delivered()
    tr.send_many(bob.announce_bases)
    alice.receive_bases(delivered, bob.b2[delivered])
    alice.measure_p3()

    tested = bob.choose_tests(cfg.test_fraction, np.random.default_rng(test_seq))
    rounds.tested[tested] = True
    reveals = list(bob.reveal_tests())
    tr.send_many(bob.reveal_tests)
    verdict = eavesdrop_check(alice, reveals, cfg.qber_abort_threshold)
    tr.send(verdict)

    kept = np.setdiff1d(delivered, tested, assume_unique=True)
    stats = SessionStats(n_rounds=cfg.n_rounds, lost=len(loss.rounds), delivered=int(delivered.size),
                         tested=int(tested.size), violations=verdict.n_violations,
                         violation_rate=verdict.violation_rate, aborted=not verdict.accept,
                         kept=int(kept.size))
    if verdict.accept:
        raw = map_to_bits(alice, bob, kept, cfg.bitmap)
    else:
        empty = np.zeros(0, dtype=np.uint8)
        raw = RawKeyPair(empty, empty, np.zeros(0, dtype=np.int64))
    if raw.rounds.size:
        stats.raw_qber = float(np.count_nonzero(raw.alice_bits != raw.bob_bits)) / raw.rounds.size

    result = SessionResult(tr, raw, stats, rounds)
    if verdict.accept and cfg.postproc.enabled and raw.rounds.size:
        _postprocess(cfg, raw, tr, stats, result, np.random.default_rng(pp_seq))
    _attach_private(tr, rounds, cfg, result)
    return result


def _postprocess(cfg, raw: RawKeyPair, tr: Transcript, stats: SessionStats,
                 result: SessionResult, rng) -> None:
    pc = cfg.postproc
    qber, sample = pp.estimate_qber(raw.alice_bits, raw.bob_bits, pc.qber_sample_fraction, rng)
    tr.send(QberSample(tuple(int(r) for r in raw.rounds[sample]), pp.bits_to_hex(raw.bob_bits[sample])))
    n_bad = int(round(qber * sample.size))
    tr.send(QberEstimate(qber, int(sample.size), n_bad))
    a = pp.drop_positions(raw.alice_bits, sample)
    b = pp.drop_positions(raw.bob_bits, sample)
    stats.sacrificed, stats.sample_mismatches, stats.qber_estimate = int(sample.size), n_bad, qber
    stats.corrected = int(a.size)
    if a.size == 0:
        return

    params = pp.ReconParams(qber, _seed_int(rng), pc.n_passes, pc.confirm_rounds)
    tr.send(ReconStart(params.seed, int(a.size), params.n_passes, params.initial_block_size,
                       params.confirm_rounds))
    rec = pp.reconcile(a, b, params)
    log = rec.log
    tr.send_many(lambda: (ReconParity(m.pass_index, m.kind, m.lo, m.hi, m.parity) for m in log))
    stats.recon_leaked, stats.recon_flips = rec.leaked_bits, rec.flips
    stats.recon_ok = bool(np.array_equal(a, rec.corrected))

    vseed = _seed_int(rng)
    ok, digest = pp.keys_agree(a, rec.corrected, vseed, pc.verify_hash_bits)
    tr.send(KeyCheck(vseed, pc.verify_hash_bits, digest))
    tr.send(KeyCheckResult(ok))
    stats.verify_ok = ok
    stats.leaked_bits = rec.leaked_bits + pc.verify_hash_bits

    out_len = pp.final_length(int(a.size), qber, stats.leaked_bits, pc.safety_margin) if ok else 0
    spec = pp.HashSpec(_seed_int(rng), out_len)
    tr.send(HashSeed(spec.seed, spec.out_len))
    prov = {"delivered": stats.delivered, "tested": stats.tested, "raw": int(raw.rounds.size),
            "sacrificed": stats.sacrificed, "corrected": stats.corrected,
            "leaked": stats.leaked_bits}
    result.final_alice = pp.privacy_amplify(a, spec, prov)
    result.final_bob = pp.privacy_amplify(rec.corrected, spec, prov)
    stats.final_len = len(result.final_alice)
    stats.final_keys_equal = bool(np.array_equal(result.final_alice.bits, result.final_bob.bits))


def _attach_private(tr: Transcript, rounds: RoundTable, cfg: SessionConfig,
                    result: SessionResult) -> None:
    d = rounds.data

    def records():
        for i in range(d.shape[0]):
            row = d[i]
            yield "alice_record", i, {
                "b1": BASES[row[_kernel.B1]].value, "o1": "+-"[row[_kernel.O1]],
                "b3": None if row[_kernel.B3] < 0 else BASES[row[_kernel.B3]].value,
                "o3": None if row[_kernel.O3] < 0 else "+-"[row[_kernel.O3]]}
            yield "bob_record", i, {
                "lost": bool(row[_kernel.LOST]),
                "b2": None if row[_kernel.B2] < 0 else BASES[row[_kernel.B2]].value,
                "o2": None if row[_kernel.O2] < 0 else "+-"[row[_kernel.O2]]}

    def finals():
        for party, key in (("alice", result.final_alice), ("bob", result.final_bob)):
            if key is not None:
                yield "final_key", None, {"party": party, "n_bits": len(key), "hex": key.hex}

    tr.private.append(records)
    tr.private.append(finals)
