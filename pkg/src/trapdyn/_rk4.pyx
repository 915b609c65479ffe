# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fixed-step RK4 for c + L x + f(x) with f stored as sparse triplets.

When the triplets cover a large share of the (j <= k) pairs the quadratic
term is evaluated from a dense pair table instead, whose inner loop runs
over contiguous output components.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()


cdef inline void _rhs(const double[::1] c, const double[:, ::1] L,
                      const long[::1] qi, const long[::1] qj, const long[::1] qk,
                      const double[::1] qw, double* x, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t a, b, t
    cdef double acc
    for a in range(n):
        acc = c[a]
        for b in range(n):
            acc += L[a, b] * x[b]
        out[a] = acc
    for t in range(qw.shape[0]):
        out[qi[t]] += qw[t] * x[qj[t]] * x[qk[t]]


cdef inline void _rhs_dense(const double[::1] c, const double[:, ::1] L,
                            const double[:, ::1] P, double* x, double* pairs,
                            double* out, Py_ssize_t n) noexcept nogil:
    # P[t, a] is the weight of pair t = (j, k), j <= k, in component a
    cdef Py_ssize_t a, b, j, k, t = 0
    cdef double acc, pt
    for j in range(n):
        for k in range(j, n):
            pairs[t] = x[j] * x[k]
            t += 1
    for a in range(n):
        acc = c[a]
        for b in range(n):
            acc += L[a, b] * x[b]
        out[a] = acc
    for t in range(P.shape[0]):
        pt = pairs[t]
        if pt != 0.0:
            for a in range(n):
                out[a] += P[t, a] * pt


DENSE_FILL = 0.25
DENSE_MAX_BYTES = 1 << 27


def _pair_table(qi, qj, qk, qw, Py_ssize_t n):
    npairs = n * (n + 1) // 2
    qi, qj, qk = (np.asarray(v, dtype=np.int_) for v in (qi, qj, qk))
    lo, hi = np.minimum(qj, qk), np.maximum(qj, qk)
    t = lo * n - lo * (lo - 1) // 2 + (hi - lo)
    P = np.zeros((npairs, n), dtype=np.float64)
    np.add.at(P, (t, qi), np.asarray(qw, dtype=np.float64))
    return P


def rk4_integrate(c, L, qi, qj, qk, qw, x0, double dt, Py_ssize_t nsteps, double blowup):
    """Integrate ``nsteps`` RK4 steps from ``x0``.

    ``qw`` holds triplet weights already doubled for off-diagonal entries.
    Returns ``(states, status, step)`` with status 0 = ok, 1 = norm above
    ``blowup``, 2 = non-finite; on failure ``states`` is truncated to the
    last accepted sample and ``step`` is the failing step index.
    """
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef const long[::1] iv = np.ascontiguousarray(qi, dtype=np.int_)
    cdef const long[::1] jv = np.ascontiguousarray(qj, dtype=np.int_)
    cdef const long[::1] kv = np.ascontiguousarray(qk, dtype=np.int_)
    cdef const double[::1] wv = np.ascontiguousarray(qw, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0]
    cdef Py_ssize_t npairs = n * (n + 1) // 2
    cdef bint dense = (wv.shape[0] >= DENSE_FILL * npairs * n
                       and npairs * n * 8 <= DENSE_MAX_BYTES and wv.shape[0] > 0)
    Parr = _pair_table(qi, qj, qk, qw, n) if dense else np.zeros((1, 1))
    cdef const double[:, ::1] P = Parr
    pair_buf = np.empty(max(npairs, 1), dtype=np.float64)
    cdef double[::1] PB = pair_buf
    cdef double* pb = &PB[0]
    out = np.empty((nsteps + 1, n), dtype=np.float64)
    cdef double[:, ::1] S = out
    work = np.empty((6, n), dtype=np.float64)
    cdef double[:, ::1] W = work
    cdef double* k1 = &W[0, 0]
    cdef double* k2 = &W[1, 0]
    cdef double* k3 = &W[2, 0]
    cdef double* k4 = &W[3, 0]
    cdef double* tmp = &W[4, 0]
    cdef double* x = &W[5, 0]
    cdef Py_ssize_t s, a
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0, nrm2, b2 = blowup * blowup
    cdef int status = 0
    cdef Py_ssize_t fail = -1

    for a in range(n):
        x[a] = x0[a]
        S[0, a] = x[a]
    with nogil:
        for s in range(1, nsteps + 1):
            if dense:
                _rhs_dense(cv, Lv, P, x, pb, k1, n)
            else:
                _rhs(cv, Lv, iv, jv, kv, wv, x, k1, n)
            for a in range(n):
                tmp[a] = x[a] + h2 * k1[a]
            if dense:
                _rhs_dense(cv, Lv, P, tmp, pb, k2, n)
            else:
                _rhs(cv, Lv, iv, jv, kv, wv, tmp, k2, n)
            for a in range(n):
                tmp[a] = x[a] + h2 * k2[a]
            if dense:
                _rhs_dense(cv, Lv, P, tmp, pb, k3, n)
            else:
                _rhs(cv, Lv, iv, jv, kv, wv, tmp, k3, n)
            for a in range(n):
                tmp[a] = x[a] + dt * k3[a]
            if dense:
                _rhs_dense(cv, Lv, P, tmp, pb, k4, n)
            else:
                _rhs(cv, Lv, iv, jv, kv, wv, tmp, k4, n)
            nrm2 = 0.0
            for a in range(n):
                x[a] = x[a] + h6 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
                nrm2 += x[a] * x[a]
            if not isfinite(nrm2):
                status = 2
                fail = s
                break
            if nrm2 > b2:
                status = 1
                fail = s
                break
            for a in range(n):
                S[s, a] = x[a]
    if status:
        return out[:fail], status, fail
    return out, 0, -1
