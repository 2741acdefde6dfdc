"""Classical post-processing: QBER sampling, parity-bisection reconciliation,
key verification and Toeplitz privacy amplification.

Keys are 1-D ``uint8`` arrays of 0/1 values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve


@dataclass(frozen=True)
class PostprocConfig:
    enabled: bool = True
    qber_sample_fraction: float = 0.1
    n_passes: int = 4
    confirm_rounds: int = 20
    verify_hash_bits: int = 32
    safety_margin: int = 30

    def __post_init__(self):
        if not 0.0 < self.qber_sample_fraction < 1.0:
            raise ValueError(f"postproc.qber_sample_fraction = {self.qber_sample_fraction} outside (0, 1)")
        for name in ("n_passes",):
            if getattr(self, name) < 1:
                raise ValueError(f"postproc.{name} must be >= 1")
        for name in ("confirm_rounds", "verify_hash_bits", "safety_margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"postproc.{name} must be >= 0")


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _as_bits(key) -> np.ndarray:
    return np.asarray(key, dtype=np.uint8).reshape(-1)


def bits_to_hex(bits) -> str:
    """Hex encoding, MSB first, final byte zero-padded on the right."""
    bits = _as_bits(bits)
    if bits.size == 0:
        return ""
    return np.packbits(bits).tobytes().hex()


def hex_to_bits(text: str, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:n]


# -- QBER estimation --------------------------------------------------------

def estimate_qber(key_a, key_b, sample_fraction: float, rng) -> tuple[float, np.ndarray]:
    """Mismatch rate on a random sample of positions; the sample is sacrificed.

    Returns ``(qber, sorted sampled positions)``; remove them with
    :func:`drop_positions` on both keys.
    """
    a, b = _as_bits(key_a), _as_bits(key_b)
    if a.size != b.size:
        raise ValueError("keys differ in length")
    if a.size == 0:
        raise ValueError("cannot estimate QBER of empty keys")
    k = min(a.size, max(1, int(math.ceil(sample_fraction * a.size))))
    idx = np.sort(rng.choice(a.size, size=k, replace=False))
    return float(np.count_nonzero(a[idx] != b[idx])) / k, idx


def drop_positions(key, positions) -> np.ndarray:
    mask = np.ones(len(key), dtype=bool)
    mask[np.asarray(positions, dtype=np.int64)] = False
    return _as_bits(key)[mask]


# -- reconciliation ---------------------------------------------------------

@dataclass(frozen=True)
class ReconParams:
    qber_estimate: float
    seed: int
    n_passes: int = 4
    confirm_rounds: int = 20

    @property
    def initial_block_size(self) -> int:
        return max(1, math.ceil(0.73 / max(self.qber_estimate, 0.01)))

    def block_size(self, pass_index: int, n: int) -> int:
        return max(1, min(n, self.initial_block_size * 2 ** pass_index))


@dataclass(frozen=True)
class ParityMessage:
    """One parity Alice discloses: ``kind`` is "block", "bisect" or "subset"."""

    pass_index: int
    kind: str
    lo: int
    hi: int
    parity: int

    def to_dict(self) -> dict:
        return {"pass": self.pass_index, "kind": self.kind, "lo": self.lo,
                "hi": self.hi, "parity": self.parity}


@dataclass
class ReconResult:
    corrected: np.ndarray
    leaked_bits: int
    log: list = field(default_factory=list)
    flips: int = 0
    exhausted: bool = False  # stopped because the disclosure budget (n bits) ran out


class _BudgetExhausted(Exception):
    pass


class _ParityLog(list):
    def __init__(self, budget: int):
        super().__init__()
        self.budget = budget

    def append(self, msg) -> None:
        if len(self) >= self.budget:
            raise _BudgetExhausted
        super().append(msg)


def _bisect(ca, cb, lo, hi, offset, pass_index, log) -> int:
    """Locate one error in positions ``[lo, hi)`` of a permuted view.

    ``ca``/``cb`` are prefix sums of the permuted keys starting at ``offset``;
    returns the permuted index of the located error.
    """

    def parity(c, i, j):
        lo_sum = c[i - offset - 1] if i > offset else 0
        return int((c[j - offset - 1] - lo_sum) & 1)

    while hi - lo > 1:
        mid = (lo + hi) // 2
        pa = parity(ca, lo, mid)
        log.append(ParityMessage(pass_index, "bisect", lo, mid, pa))
        if pa != parity(cb, lo, mid):
            hi = mid
        else:
            lo = mid
    return lo


def reconcile(key_a, key_b, params: ReconParams) -> ReconResult:
    """Correct Bob's key towards Alice's with shuffled block-parity bisection.

    Each pass permutes the key, compares block parities and bisects every
    odd-parity block to flip one error. A final phase compares parities of
    random half-subsets (bisecting on disagreement) until ``confirm_rounds``
    consecutive agreements. Only Alice's parities count as leaked bits, and
    at most ``n`` are ever disclosed.
    """
    a = _as_bits(key_a)
    b = _as_bits(key_b).copy()
    if a.size != b.size:
        raise ValueError("keys differ in length")
    n = a.size
    res = ReconResult(b, 0, _ParityLog(n))
    if n == 0:
        return res
    try:
        _run_passes(a, b, params, res)
    except _BudgetExhausted:
        res.exhausted = True
    res.log = list(res.log)
    res.leaked_bits = len(res.log)
    return res


def _run_passes(a, b, params: ReconParams, res: ReconResult) -> None:
    n = a.size
    rng = np.random.default_rng(params.seed)
    log = res.log
    for p in range(params.n_passes):
        order = rng.permutation(n)
        k = params.block_size(p, n)
        ap, bp = a[order].astype(np.int64), b[order].astype(np.int64)
        starts = np.arange(0, n, k)
        par_a = np.add.reduceat(ap, starts) & 1
        par_b = np.add.reduceat(bp, starts) & 1
        for lo, pa, pb in zip(starts.tolist(), par_a.tolist(), par_b.tolist()):
            hi = min(n, lo + k)
            log.append(ParityMessage(p, "block", lo, hi, pa))
            if pa != pb:
                # blocks are disjoint, so earlier flips never touch this one
                i = _bisect(np.cumsum(ap[lo:hi]), np.cumsum(bp[lo:hi]), lo, hi, lo, p, log)
                b[order[i]] ^= 1
                res.flips += 1
    streak, r = 0, 0
    while streak < params.confirm_rounds:
        subset = np.flatnonzero(rng.random(n) < 0.5)
        ca, cb = np.cumsum(a[subset], dtype=np.int64), np.cumsum(b[subset], dtype=np.int64)
        pa = int(ca[-1] & 1) if subset.size else 0
        log.append(ParityMessage(params.n_passes + r, "subset", 0, subset.size, pa))
        if subset.size and pa != int(cb[-1] & 1):
            i = _bisect(ca, cb, 0, subset.size, 0, params.n_passes + r, log)
            b[subset[i]] ^= 1
            res.flips += 1
            streak = 0
        else:
            streak += 1
        r += 1


# -- hashing ----------------------------------------------------------------

def toeplitz_seed_bits(seed: int, n: int, out_len: int) -> np.ndarray:
    """The ``n + out_len - 1`` bits defining the diagonals of the hash matrix."""
    return np.random.default_rng(seed).integers(0, 2, size=max(n + out_len - 1, 0), dtype=np.uint8)


def toeplitz_matrix(seed_bits, n: int, out_len: int) -> np.ndarray:
    """Dense ``out_len x n`` matrix with ``T[i, j] = s[i - j + n - 1]``."""
    s = _as_bits(seed_bits)
    i = np.arange(out_len)[:, None]
    j = np.arange(n)[None, :]
    return s[i - j + n - 1]


def toeplitz_hash(key, seed: int, out_len: int) -> np.ndarray:
    key = _as_bits(key)
    n = key.size
    if out_len == 0 or n == 0:
        return np.zeros(out_len if n else 0, dtype=np.uint8)
    s = toeplitz_seed_bits(seed, n, out_len)
    if n * out_len <= 1 << 22:
        # row i of T is s[i:i + n] reversed
        rows = np.lib.stride_tricks.sliding_window_view(s, n)[:out_len, ::-1]
        return (rows.astype(np.int64) @ key.astype(np.int64) & 1).astype(np.uint8)
    # row i of T.key is a full convolution sample at i + n - 1
    conv = np.rint(fftconvolve(s.astype(np.float64), key.astype(np.float64))).astype(np.int64)
    return (conv[n - 1:n - 1 + out_len] & 1).astype(np.uint8)


def keys_agree(key_a, key_b, seed: int, n_bits: int) -> tuple[bool, str]:
    """Compare a disclosed ``n_bits`` hash of Alice's key with Bob's; returns (ok, hash hex)."""
    ha = toeplitz_hash(key_a, seed, n_bits)
    hb = toeplitz_hash(key_b, seed, n_bits)
    return bool(np.array_equal(ha, hb)), bits_to_hex(ha)


# -- privacy amplification --------------------------------------------------

@dataclass(frozen=True)
class HashSpec:
    seed: int
    out_len: int


def final_length(n: int, qber: float, leaked_bits: int, safety_margin: int = 30) -> int:
    """``max(0, floor(n (1 - h2(qber)) - leaked - margin))``, capped at ``n``."""
    raw = math.floor(n * (1.0 - binary_entropy(qber)) - leaked_bits - safety_margin)
    return int(min(n, max(0, raw)))


@dataclass
class FinalKey:
    bits: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def hex(self) -> str:
        return bits_to_hex(self.bits)


def privacy_amplify(key, spec: HashSpec, provenance: dict | None = None) -> FinalKey:
    key = _as_bits(key)
    if not 0 <= spec.out_len <= key.size:
        raise ValueError(f"out_len {spec.out_len} outside [0, {key.size}]")
    bits = toeplitz_hash(key, spec.seed, spec.out_len)
    prov = dict(provenance or {})
    prov["final"] = int(bits.size)
    return FinalKey(bits, prov)
