# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: lattice ray characteristic and linear-split Radon binning."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin, floor

cnp.import_array()


def ray_characteristic(coords, weights, directions, dk, n_k):
    cdef double[:, ::1] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(np.atleast_2d(directions), dtype=np.float64)
    cdef Py_ssize_t n_f = d.shape[0], n_c = c.shape[0], dim = c.shape[1]
    cdef double[::1] step = np.array(np.broadcast_to(np.asarray(dk, dtype=np.float64), (n_f,)))
    counts_arr = np.array(np.broadcast_to(np.asarray(n_k, dtype=np.int64), (n_f,)))
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t n_max = int(counts_arr.max())
    out_re = np.zeros((n_f, n_max), dtype=np.float64)
    out_im = np.zeros((n_f, n_max), dtype=np.float64)
    cdef double[:, ::1] ore = out_re
    cdef double[:, ::1] oim = out_im
    cdef Py_ssize_t f, ci, m, a
    cdef double s, zr, zi, rr, ri, tmp
    for f in prange(n_f, nogil=True, schedule="dynamic"):
        for ci in range(n_c):
            s = 0.0
            for a in range(dim):
                s = s + c[ci, a] * d[f, a]
            rr = cos(step[f] * s)
            ri = sin(step[f] * s)
            zr = w[ci]
            zi = 0.0
            for m in range(counts[f]):
                ore[f, m] += zr
                oim[f, m] += zi
                tmp = zr * rr - zi * ri
                zi = zr * ri + zi * rr
                zr = tmp
    return out_re + 1j * out_im


def radon_bin(s, weights, double x0, double h, Py_ssize_t n_bins):
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    hist = np.zeros(n_bins, dtype=np.float64)
    cdef double[::1] hv = hist
    cdef Py_ssize_t i, n = sv.shape[0], i0
    cdef double t, frac, outside = 0.0
    for i in range(n):
        t = (sv[i] - x0) / h
        i0 = <Py_ssize_t>floor(t)
        frac = t - i0
        if 0 <= i0 < n_bins - 1:
            hv[i0] += wv[i] * (1.0 - frac)
            hv[i0 + 1] += wv[i] * frac
        elif i0 == n_bins - 1 and frac == 0.0:
            hv[i0] += wv[i]
        else:
            outside += wv[i]
    return hist, outside
