"""Vectorized numpy implementation of the per-round simulation kernel.

The arithmetic is written operation-by-operation in the same order as the
compiled kernel, so both produce bit-identical outputs for the same uniforms.
"""
import numpy as np

R = 0.7071067811865476  # 1/sqrt(2)

# uniform columns
U_B1, U_O1, U_EVE_B, U_EVE_O, U_LOSS, U_DEPOL, U_PAULI, U_B2, U_O2, U_O3 = range(10)
N_UNIFORMS = 10
# output columns
B1, O1, EVE_B, EVE_O, LOST, NOISE, B2, O2, B3, O3 = range(10)
N_OUT = 10

EVE_NONE, EVE_INTERCEPT, EVE_ANCILLA = 0, 1, 2


def _evec(basis, outcome):
    """Eigenvector components (e0r, e0i, e1r, e1i) per round; basis 0=X 1=Y."""
    s = np.where(outcome == 0, R, -R)
    zero = np.zeros_like(s)
    e0r = np.full_like(s, R)
    e1r = np.where(basis == 0, s, zero)
    e1i = np.where(basis == 0, zero, s)
    return e0r, zero, e1r, e1i


def _pairs(nq, q):
    bit = 1 << q
    return [(i, i | bit) for i in range(1 << nq) if not i & bit]


def _coeffs(re, im, pairs, e):
    e0r, e0i, e1r, e1i = e
    cs = []
    p = np.zeros(re.shape[0])
    for i0, i1 in pairs:
        # conj(e0) * a0 + conj(e1) * a1
        t0r = e0r * re[:, i0] + e0i * im[:, i0]
        t0i = e0r * im[:, i0] - e0i * re[:, i0]
        t1r = e1r * re[:, i1] + e1i * im[:, i1]
        t1i = e1r * im[:, i1] - e1i * re[:, i1]
        cr = t0r + t1r
        ci = t0i + t1i
        p = p + (cr * cr + ci * ci)
        cs.append((cr, ci))
    return cs, p


def _measure(re, im, nq, q, basis, u):
    pairs = _pairs(nq, q)
    zero_out = np.zeros(re.shape[0], dtype=np.int64)
    cp, pp = _coeffs(re, im, pairs, _evec(basis, zero_out))
    cm, pm = _coeffs(re, im, pairs, _evec(basis, zero_out + 1))
    outcome = np.where(u < pp, 0, 1)
    outcome = np.where((outcome == 1) & (pm <= 0.0), 0, outcome)
    minus = outcome == 1
    p = np.where(minus, pm, pp)
    with np.errstate(divide="ignore"):
        inv = 1.0 / np.sqrt(p)
    e0r, e0i, e1r, e1i = _evec(basis, outcome)
    for k, (i0, i1) in enumerate(pairs):
        cr = np.where(minus, cm[k][0], cp[k][0])
        ci = np.where(minus, cm[k][1], cp[k][1])
        re[:, i0] = (e0r * cr - e0i * ci) * inv
        im[:, i0] = (e0r * ci + e0i * cr) * inv
        re[:, i1] = (e1r * cr - e1i * ci) * inv
        im[:, i1] = (e1r * ci + e1i * cr) * inv
    return outcome


def _pauli(re, im, nq, q, which, mask):
    # which: 1=X 2=Y 3=Z, applied where mask
    for i0, i1 in _pairs(nq, q):
        a0r, a0i, a1r, a1i = re[:, i0].copy(), im[:, i0].copy(), re[:, i1].copy(), im[:, i1].copy()
        mx = mask & (which == 1)
        my = mask & (which == 2)
        mz = mask & (which == 3)
        # X: swap
        re[mx, i0], im[mx, i0], re[mx, i1], im[mx, i1] = a1r[mx], a1i[mx], a0r[mx], a0i[mx]
        # Y: a0' = -i a1, a1' = i a0
        re[my, i0], im[my, i0] = a1i[my], -a1r[my]
        re[my, i1], im[my, i1] = -a0i[my], a0r[my]
        # Z: a1' = -a1
        re[mz, i1], im[mz, i1] = -a1r[mz], -a1i[mz]


def _unitary_p2_anc(re, im, ur, ui):
    # local index l = bit(P2) + 2*bit(ancilla); qubits 1 and 3
    for base in (0, 1, 4, 5):
        idx = [base, base | 2, base | 8, base | 10]
        ar = [re[:, j].copy() for j in idx]
        ai = [im[:, j].copy() for j in idx]
        for l in range(4):
            accr = np.zeros(re.shape[0])
            acci = np.zeros(re.shape[0])
            for m in range(4):
                accr = accr + (ur[l, m] * ar[m] - ui[l, m] * ai[m])
                acci = acci + (ur[l, m] * ai[m] + ui[l, m] * ar[m])
            re[:, idx[l]] = accr
            im[:, idx[l]] = acci


def simulate_rounds(u, loss_prob, depolarize_prob, eve_mode, eve_x_prob,
                    unitary_re, unitary_im, ancilla_re, ancilla_im):
    u = np.ascontiguousarray(u, dtype=np.float64)
    n = u.shape[0]
    out = np.full((n, N_OUT), -1, dtype=np.int8)
    if n == 0:
        return out
    nq = 4 if eve_mode == EVE_ANCILLA else 3
    dim = 1 << nq
    re = np.zeros((n, dim))
    im = np.zeros((n, dim))
    if nq == 3:
        re[:, 0] = R
        re[:, 7] = R
    else:
        a0r, a1r = float(ancilla_re[0]), float(ancilla_re[1])
        a0i, a1i = float(ancilla_im[0]), float(ancilla_im[1])
        for j, (ar, ai) in ((0, (a0r, a0i)), (7, (a0r, a0i)), (8, (a1r, a1i)), (15, (a1r, a1i))):
            re[:, j] = R * ar
            im[:, j] = R * ai

    b1 = np.where(u[:, U_B1] < 0.5, 0, 1)
    out[:, B1] = b1
    out[:, O1] = _measure(re, im, nq, 0, b1, u[:, U_O1])

    if eve_mode == EVE_INTERCEPT:
        be = np.where(u[:, U_EVE_B] < eve_x_prob, 0, 1)
        out[:, EVE_B] = be
        out[:, EVE_O] = _measure(re, im, nq, 1, be, u[:, U_EVE_O])
    elif eve_mode == EVE_ANCILLA:
        _unitary_p2_anc(re, im, np.asarray(unitary_re, dtype=np.float64),
                        np.asarray(unitary_im, dtype=np.float64))

    lost = u[:, U_LOSS] < loss_prob
    out[:, LOST] = lost
    noisy = (~lost) & (u[:, U_DEPOL] < depolarize_prob)
    which = np.minimum((u[:, U_PAULI] * 4.0).astype(np.int64), 3)
    out[:, NOISE] = np.where(noisy, which, -1)
    _pauli(re, im, nq, 1, which, noisy)

    b2 = np.where(u[:, U_B2] < 0.5, 0, 1)
    o2 = _measure(re, im, nq, 1, b2, u[:, U_O2])
    b3 = np.where(b1 == b2, 0, 1)
    o3 = _measure(re, im, nq, 2, b3, u[:, U_O3])
    out[:, B2] = np.where(lost, -1, b2)
    out[:, O2] = np.where(lost, -1, o2)
    out[:, B3] = np.where(lost, -1, b3)
    out[:, O3] = np.where(lost, -1, o3)
    return out
