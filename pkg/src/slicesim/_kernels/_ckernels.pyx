# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled contention kernels; semantics identical to _pykernels.py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def contention_round(choices, int pool):
    """Success mask for one opportunity: a preamble picked exactly once wins."""
    cdef cnp.int64_t[::1] ch = np.ascontiguousarray(choices, dtype=np.int64)
    cdef Py_ssize_t n = ch.shape[0]
    cdef cnp.int64_t[::1] counts = np.zeros(pool, dtype=np.int64)
    cdef cnp.uint8_t[::1] mask = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i
    for i in range(n):
        counts[ch[i]] += 1
    for i in range(n):
        mask[i] = counts[ch[i]] == 1
    return np.asarray(mask).view(np.bool_)


def batch_success_count(choices, int pool):
    """Total winners over a (opportunities x contenders) matrix of choices."""
    cdef cnp.int64_t[:, ::1] ch = np.ascontiguousarray(choices, dtype=np.int64)
    cdef Py_ssize_t n_opp = ch.shape[0]
    cdef Py_ssize_t n = ch.shape[1]
    cdef cnp.int64_t[::1] counts = np.zeros(pool, dtype=np.int64)
    cdef Py_ssize_t k, i
    cdef long long total = 0
    for k in range(n_opp):
        for i in range(n):
            counts[ch[k, i]] += 1
        for i in range(n):
            if counts[ch[k, i]] == 1:
                total += 1
        for i in range(n):
            counts[ch[k, i]] = 0
    return int(total)
