# cython: language_level=3
"""Compiled hot loops: posterior likelihood surface and batched delta^2."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def likelihood_surface(const double[:, :, ::1] log_p, const double[::1] counts):
    """Return ``(exp(ll - max ll), sum)`` with ``ll = sum_s counts[s] * log_p[s]``."""
    cdef Py_ssize_t n_set = log_p.shape[0]
    cdef Py_ssize_t n_phi = log_p.shape[1]
    cdef Py_ssize_t n_v = log_p.shape[2]
    cdef Py_ssize_t s, i, j
    cdef double c, peak, total, val
    out_arr = np.zeros((n_phi, n_v), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    for s in range(n_set):
        c = counts[s]
        if c == 0.0:
            continue
        for i in range(n_phi):
            for j in range(n_v):
                out[i, j] += c * log_p[s, i, j]

    peak = out[0, 0]
    for i in range(n_phi):
        for j in range(n_v):
            if out[i, j] > peak:
                peak = out[i, j]

    total = 0.0
    for i in range(n_phi):
        for j in range(n_v):
            val = exp(out[i, j] - peak)
            out[i, j] = val
            total += val
    return out_arr, total


def delta2_batch(
    const double[:, ::1] values,
    const cnp.intp_t[::1] lo,
    const cnp.intp_t[::1] hi,
    const double[::1] t,
    const double[::1] ref_vals,
    const double[::1] weights,
    double length,
):
    """Weighted squared interpolation error for every row of ``values``."""
    cdef Py_ssize_t n_rep = values.shape[0]
    cdef Py_ssize_t n_ref = ref_vals.shape[0]
    cdef Py_ssize_t r, i
    cdef double acc, est, diff
    out_arr = np.empty(n_rep, dtype=np.float64)
    cdef double[::1] out = out_arr
    for r in range(n_rep):
        acc = 0.0
        for i in range(n_ref):
            est = (1.0 - t[i]) * values[r, lo[i]] + t[i] * values[r, hi[i]]
            diff = est - ref_vals[i]
            acc += diff * diff * weights[i]
        out[r] = acc / length
    return out_arr
