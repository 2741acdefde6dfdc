# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-round simulation kernel.

Mirrors ``_rounds_py`` operation for operation; see that module for the
column layout. Compile without FMA contraction so results stay bit-identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double R = 0.7071067811865476

DEF U_B1 = 0
DEF U_O1 = 1
DEF U_EVE_B = 2
DEF U_EVE_O = 3
DEF U_LOSS = 4
DEF U_DEPOL = 5
DEF U_PAULI = 6
DEF U_B2 = 7
DEF U_O2 = 8
DEF U_O3 = 9

DEF EVE_INTERCEPT = 1
DEF EVE_ANCILLA = 2


cdef inline void _evec(int basis, int outcome, double* e) nogil:
    cdef double s = R if outcome == 0 else -R
    e[0] = R
    e[1] = 0.0
    if basis == 0:
        e[2] = s
        e[3] = 0.0
    else:
        e[2] = 0.0
        e[3] = s


cdef inline double _coeffs(double* re, double* im, int dim, int bit,
                           double* e, double* cr, double* ci) nogil:
    cdef int i, k = 0
    cdef double t0r, t0i, t1r, t1i, p = 0.0
    for i in range(dim):
        if i & bit:
            continue
        t0r = e[0] * re[i] + e[1] * im[i]
        t0i = e[0] * im[i] - e[1] * re[i]
        t1r = e[2] * re[i | bit] + e[3] * im[i | bit]
        t1i = e[2] * im[i | bit] - e[3] * re[i | bit]
        cr[k] = t0r + t1r
        ci[k] = t0i + t1i
        p = p + (cr[k] * cr[k] + ci[k] * ci[k])
        k += 1
    return p


cdef int _measure(double* re, double* im, int dim, int q, int basis, double u) nogil:
    cdef int bit = 1 << q
    cdef double ep[4]
    cdef double em[4]
    cdef double cpr[8]
    cdef double cpi[8]
    cdef double cmr[8]
    cdef double cmi[8]
    cdef double pp, pm, p, inv
    cdef double* e
    cdef double* cr
    cdef double* ci
    cdef int outcome, i, k
    _evec(basis, 0, ep)
    _evec(basis, 1, em)
    pp = _coeffs(re, im, dim, bit, ep, cpr, cpi)
    pm = _coeffs(re, im, dim, bit, em, cmr, cmi)
    outcome = 0 if u < pp else 1
    if outcome == 1 and pm <= 0.0:
        outcome = 0
    if outcome == 1:
        p = pm
        e = em
        cr = cmr
        ci = cmi
    else:
        p = pp
        e = ep
        cr = cpr
        ci = cpi
    inv = 1.0 / sqrt(p)
    k = 0
    for i in range(dim):
        if i & bit:
            continue
        re[i] = (e[0] * cr[k] - e[1] * ci[k]) * inv
        im[i] = (e[0] * ci[k] + e[1] * cr[k]) * inv
        re[i | bit] = (e[2] * cr[k] - e[3] * ci[k]) * inv
        im[i | bit] = (e[2] * ci[k] + e[3] * cr[k]) * inv
        k += 1
    return outcome


cdef void _pauli(double* re, double* im, int dim, int q, int which) nogil:
    cdef int bit = 1 << q
    cdef int i, j
    cdef double a0r, a0i, a1r, a1i
    for i in range(dim):
        if i & bit:
            continue
        j = i | bit
        a0r = re[i]
        a0i = im[i]
        a1r = re[j]
        a1i = im[j]
        if which == 1:
            re[i] = a1r
            im[i] = a1i
            re[j] = a0r
            im[j] = a0i
        elif which == 2:
            re[i] = a1i
            im[i] = -a1r
            re[j] = -a0i
            im[j] = a0r
        elif which == 3:
            re[j] = -a1r
            im[j] = -a1i


cdef void _unitary(double* re, double* im, double* ur, double* ui) nogil:
    cdef int bases[4]
    cdef int idx[4]
    cdef double ar[4]
    cdef double ai[4]
    cdef int b, l, m
    cdef double accr, acci
    bases[0] = 0
    bases[1] = 1
    bases[2] = 4
    bases[3] = 5
    for b in range(4):
        idx[0] = bases[b]
        idx[1] = bases[b] | 2
        idx[2] = bases[b] | 8
        idx[3] = bases[b] | 10
        for m in range(4):
            ar[m] = re[idx[m]]
            ai[m] = im[idx[m]]
        for l in range(4):
            accr = 0.0
            acci = 0.0
            for m in range(4):
                accr = accr + (ur[4 * l + m] * ar[m] - ui[4 * l + m] * ai[m])
                acci = acci + (ur[4 * l + m] * ai[m] + ui[4 * l + m] * ar[m])
            re[idx[l]] = accr
            im[idx[l]] = acci


def simulate_rounds(u, double loss_prob, double depolarize_prob, int eve_mode, double eve_x_prob,
                    unitary_re, unitary_im, ancilla_re, ancilla_im):
    cdef double[:, ::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out_arr = np.full((n, 10), -1, dtype=np.int8)
    cdef signed char[:, ::1] out = out_arr
    cdef double[::1] urv = np.ascontiguousarray(unitary_re, dtype=np.float64).reshape(-1)
    cdef double[::1] uiv = np.ascontiguousarray(unitary_im, dtype=np.float64).reshape(-1)
    cdef double a0r = ancilla_re[0], a1r = ancilla_re[1]
    cdef double a0i = ancilla_im[0], a1i = ancilla_im[1]
    cdef int nq = 4 if eve_mode == EVE_ANCILLA else 3
    cdef int dim = 1 << nq
    cdef double re[16]
    cdef double im[16]
    cdef Py_ssize_t r
    cdef int j, b1, b2, b3, be, o2, o3, which, lost
    if n == 0:
        return out_arr
    with nogil:
        for r in range(n):
            for j in range(dim):
                re[j] = 0.0
                im[j] = 0.0
            if nq == 3:
                re[0] = R
                re[7] = R
            else:
                re[0] = R * a0r
                im[0] = R * a0i
                re[7] = R * a0r
                im[7] = R * a0i
                re[8] = R * a1r
                im[8] = R * a1i
                re[15] = R * a1r
                im[15] = R * a1i

            b1 = 0 if uv[r, U_B1] < 0.5 else 1
            out[r, 0] = b1
            out[r, 1] = _measure(re, im, dim, 0, b1, uv[r, U_O1])

            if eve_mode == EVE_INTERCEPT:
                be = 0 if uv[r, U_EVE_B] < eve_x_prob else 1
                out[r, 2] = be
                out[r, 3] = _measure(re, im, dim, 1, be, uv[r, U_EVE_O])
            elif eve_mode == EVE_ANCILLA:
                _unitary(re, im, &urv[0], &uiv[0])

            lost = 1 if uv[r, U_LOSS] < loss_prob else 0
            out[r, 4] = lost
            which = <int>(uv[r, U_PAULI] * 4.0)
            if which > 3:
                which = 3
            if lost == 0 and uv[r, U_DEPOL] < depolarize_prob:
                out[r, 5] = which
                _pauli(re, im, dim, 1, which)

            b2 = 0 if uv[r, U_B2] < 0.5 else 1
            o2 = _measure(re, im, dim, 1, b2, uv[r, U_O2])
            b3 = 0 if b1 == b2 else 1
            o3 = _measure(re, im, dim, 2, b3, uv[r, U_O3])
            if lost == 0:
                out[r, 6] = b2
                out[r, 7] = o2
                out[r, 8] = b3
                out[r, 9] = o3
    return out_arr
