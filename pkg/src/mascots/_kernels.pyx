# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SAX window encoder. Mirrors ``mascots._kernels_py.encode_windows``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def encode_windows(const double[:, ::1] x, Py_ssize_t window, Py_ssize_t word_length,
                   Py_ssize_t stride, Py_ssize_t dilation, const double[::1] cuts,
                   double flat_std=1e-8):
    """SAX codes of every strided/dilated window of every row of ``x``.

    Returns an int64 array of shape (n_rows, n_windows) holding the base-|A|
    positional code of each word (no config offset).
    """
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t span = (window - 1) * dilation + 1
    cdef Py_ssize_t n_cuts = cuts.shape[0]
    cdef Py_ssize_t alphabet = n_cuts + 1
    cdef Py_ssize_t seg = window // word_length
    if span > m:
        return np.empty((n, 0), dtype=np.int64)
    cdef Py_ssize_t n_win = (m - span) // stride + 1
    out_arr = np.empty((n, n_win), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr

    cdef Py_ssize_t i, wi, t, p, s, q, c
    cdef double mu, var, sigma, acc, v, d
    cdef cnp.int64_t code
    with nogil:
        for i in range(n):
            for wi in range(n_win):
                t = wi * stride
                acc = 0.0
                for p in range(window):
                    acc = acc + x[i, t + p * dilation]
                mu = acc / window
                var = 0.0
                for p in range(window):
                    d = x[i, t + p * dilation] - mu
                    var = var + d * d
                sigma = sqrt(var / window)
                code = 0
                for s in range(word_length):
                    if sigma < flat_std:
                        v = 0.0
                    else:
                        acc = 0.0
                        for q in range(seg):
                            acc = acc + (x[i, t + (s * seg + q) * dilation] - mu) / sigma
                        v = acc / seg
                    c = 0
                    while c < n_cuts and cuts[c] <= v:
                        c += 1
                    code = code * alphabet + c
                out[i, wi] = code
    return out_arr
