# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: separable mirror convolution, sub-map stamping and the
runtime sub-map combination."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

from ._pykernels import OFFSETS as _PY_OFFSETS


cdef cnp.ndarray _mirror_index(Py_ssize_t n, Py_ssize_t radius):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(n + 2 * radius, dtype=np.int64)
    cdef Py_ssize_t i, j, period
    period = 2 * (n - 1)
    for i in range(n + 2 * radius):
        j = i - radius
        if n == 1:
            idx[i] = 0
            continue
        if j < 0:
            j = -j
        j = j % period
        if j > n - 1:
            j = period - j
        idx[i] = j
    return idx


def convolve_axis(src, taps, int axis):
    cdef double[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef double[::1] k = np.ascontiguousarray(taps, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], nt = k.shape[0]
    cdef Py_ssize_t r = nt // 2
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef cnp.int64_t[::1] idx
    cdef Py_ssize_t y, x, t
    cdef double acc
    if axis == 1:
        idx = _mirror_index(w, r)
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for t in range(nt):
                    acc = acc + k[t] * s[y, idx[x + 2 * r - t]]
                out[y, x] = acc
    elif axis == 0:
        idx = _mirror_index(h, r)
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for t in range(nt):
                    acc = acc + k[t] * s[idx[y + 2 * r - t], x]
                out[y, x] = acc
    else:
        raise ValueError("axis must be 0 or 1")
    return out_arr


def build_submaps(ys, xs, groups, int n_groups, shape, kernels):
    cdef cnp.int64_t[::1] yv = np.ascontiguousarray(ys, dtype=np.int64)
    cdef cnp.int64_t[::1] xv = np.ascontiguousarray(xs, dtype=np.int64)
    cdef cnp.int64_t[::1] gv = np.ascontiguousarray(groups, dtype=np.int64)
    cdef double[:, :, ::1] kern = np.ascontiguousarray(kernels, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] offs = np.ascontiguousarray(_PY_OFFSETS, dtype=np.int64)
    cdef Py_ssize_t h = shape[0], w = shape[1]
    P_arr = np.zeros((n_groups, h, w, 7), dtype=np.float32)
    owner_arr = np.full((n_groups, h, w), -1, dtype=np.int32)
    cdef float[:, :, :, ::1] P = P_arr
    cdef int[:, :, ::1] owner = owner_arr
    cdef Py_ssize_t n = yv.shape[0], o, i, b, y, x, g, dy, dx
    for o in range(offs.shape[0]):
        dy = offs[o, 0]
        dx = offs[o, 1]
        for i in range(n):
            y = yv[i] + dy
            x = xv[i] + dx
            if y < 0 or y >= h or x < 0 or x >= w:
                continue
            g = gv[i]
            for b in range(7):
                P[g, y, x, b] = <float>(<double>P[g, y, x, b] + kern[b, dy + 4, dx + 4])
            if owner[g, y, x] < 0:
                owner[g, y, x] = <int>i
    return P_arr, owner_arr


def combine_submaps(P_in, owner_in, weights, out=None):
    cdef float[:, :, :, ::1] P = P_in
    cdef int[:, :, ::1] owner = owner_in
    cdef double[:, ::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t S = P.shape[0], h = P.shape[1], w = P.shape[2]
    if out is None:
        out = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] acc_out = out
    cdef Py_ssize_t g, y, x, b
    cdef int o
    cdef double acc
    for g in range(S):
        for y in range(h):
            for x in range(w):
                o = owner[g, y, x]
                if o >= 0:
                    acc = 0.0
                    for b in range(7):
                        acc = acc + P[g, y, x, b] * wt[o, b]
                    acc_out[y, x] += acc
    return out
