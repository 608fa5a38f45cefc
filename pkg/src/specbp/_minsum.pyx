# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled flooding min-sum kernel.

Arithmetic order mirrors ``_minsum_py`` exactly so both backends return
bit-identical outcomes.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs, ldexp

cnp.import_array()


cdef inline double _clip(double v, double c) noexcept nogil:
    if v > c:
        return c
    if v < -c:
        return -c
    return v


def min_sum(
    const cnp.int64_t[::1] chk_ptr,
    const cnp.int64_t[::1] edge_var,
    const double[::1] ch_llr,
    const cnp.uint8_t[::1] syndrome,
    int max_iters,
    double fixed_alpha,
    double clamp,
    bint track,
):
    cdef Py_ssize_t m = chk_ptr.shape[0] - 1
    cdef Py_ssize_t n = ch_llr.shape[0]
    cdef Py_ssize_t n_edges = edge_var.shape[0]

    e_hat_arr = np.zeros(n, dtype=np.uint8)
    llr_arr = np.empty(n, dtype=np.float64)
    flips_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] e_hat = e_hat_arr
    cdef double[::1] llr_out = llr_arr
    cdef cnp.int64_t[::1] flips = flips_arr

    cdef double[::1] total = np.array(ch_llr, dtype=np.float64)
    cdef double[::1] acc = np.zeros(n, dtype=np.float64)
    cdef double[::1] c2v = np.zeros(n_edges, dtype=np.float64)
    cdef double[::1] v2c = np.zeros(n_edges, dtype=np.float64)

    cdef Py_ssize_t i, j, e, v, min_edge
    cdef int it = 0
    cdef int iters_done = 0
    cdef bint converged = False
    cdef double alpha, mag, min1, min2, out
    cdef int parity
    cdef cnp.uint8_t bit

    with nogil:
        for it in range(1, max_iters + 1):
            if fixed_alpha > 0:
                alpha = fixed_alpha
            else:
                alpha = 1.0 - ldexp(1.0, -it)

            for e in range(n_edges):
                v2c[e] = _clip(total[edge_var[e]] - c2v[e], clamp)

            for j in range(m):
                min1 = INFINITY
                min2 = INFINITY
                min_edge = -1
                parity = syndrome[j]
                for e in range(chk_ptr[j], chk_ptr[j + 1]):
                    mag = fabs(v2c[e])
                    if v2c[e] < 0:
                        parity ^= 1
                    if mag < min1:
                        min2 = min1
                        min1 = mag
                        min_edge = e
                    elif mag < min2:
                        min2 = mag
                for e in range(chk_ptr[j], chk_ptr[j + 1]):
                    if e == min_edge:
                        out = alpha * min2
                    else:
                        out = alpha * min1
                    if parity ^ (v2c[e] < 0):
                        out = -out
                    c2v[e] = _clip(out, clamp)

            for v in range(n):
                acc[v] = 0.0
            for e in range(n_edges):
                acc[edge_var[e]] += c2v[e]
            for v in range(n):
                total[v] = ch_llr[v] + acc[v]
                llr_out[v] = _clip(total[v], clamp)
                bit = 1 if total[v] <= 0 else 0
                if track and bit != e_hat[v]:
                    flips[v] += 1
                e_hat[v] = bit

            iters_done = it
            converged = True
            for j in range(m):
                parity = syndrome[j]
                for e in range(chk_ptr[j], chk_ptr[j + 1]):
                    parity ^= e_hat[edge_var[e]]
                if parity:
                    converged = False
                    break
            if converged:
                break

    if max_iters < 1:
        for v in range(n):
            llr_out[v] = _clip(ch_llr[v], clamp)
    return bool(converged), iters_done, e_hat_arr, llr_arr, flips_arr
