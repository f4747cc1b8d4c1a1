# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, pow, sqrt

cnp.import_array()


def uniform_interp(values, double h, q, int order=6):
    cdef const double complex[:, :] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef const double[:, :] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n_rows = v.shape[0], n_points = v.shape[1], n_q = qq.shape[1]
    out_arr = np.empty((n_rows, n_q), dtype=np.complex128)
    cdef double complex[:, :] out = out_arr
    cdef Py_ssize_t r, m, k, j, i0
    cdef double x, w
    cdef double complex acc
    cdef int half = order // 2 - 1
    for r in range(n_rows):
        for m in range(n_q):
            i0 = <Py_ssize_t>floor(qq[r, m] / h) - half
            if i0 < 0:
                i0 = 0
            if i0 > n_points - order:
                i0 = n_points - order
            x = qq[r, m] / h - i0
            acc = 0
            for k in range(order):
                w = 1.0
                for j in range(order):
                    if j != k:
                        w *= (x - j) / (k - j)
                acc = acc + w * v[r, i0 + k]
            out[r, m] = acc
    return out_arr


def holder_pairs_max(values, nodes, double eta, col_weight, mask):
    cdef const double complex[:, :] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef const double[:] y = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[:] cw = np.ascontiguousarray(col_weight, dtype=np.float64)
    cdef const cnp.uint8_t[:, :] ok = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t n = v.shape[0], n_cols = v.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double best = 0.0, d, q, re, im
    cdef long count = 0
    for i in range(n):
        for j in range(i + 1, n):
            d = pow(fabs(y[i] - y[j]), eta)
            for c in range(n_cols):
                if ok[i, c] and ok[j, c]:
                    count += 1
                    re = v[i, c].real - v[j, c].real
                    im = v[i, c].imag - v[j, c].imag
                    q = sqrt(re * re + im * im) * cw[c] / d
                    if q > best:
                        best = q
    return best, count
