# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled heralding kernels (see ``_fallback`` for the reference semantics)."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef enum:
    STRIDE = 8

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double INV53 = 1.0 / 9007199254740992.0

ATTEMPT_STRIDE = STRIDE


cdef inline double _unit(uint64_t key, uint64_t counter) nogil:
    cdef uint64_t z = key + (counter + 1) * GAMMA
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    z = z ^ (z >> 31)
    return <double>(z >> 11) * INV53


cdef inline int _real(uint64_t key, uint64_t base, double pf, double pe,
                      double pc, double pw) nogil:
    # short-circuit in the same order as the fallback's mask product
    if _unit(key, base) < pf:
        return 0
    if _unit(key, base + 2) >= pe:
        return 0
    if _unit(key, base + 3) >= pc:
        return 0
    return _unit(key, base + 4) < pw


def uniforms(uint64_t key, uint64_t start, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _unit(key, start + i)
    return out


def first_herald(uint64_t key, int64_t start, int64_t stop, th):
    cdef double pf = th[0], pe = th[1], pc = th[2], pw = th[3], pd = th[4]
    cdef int64_t i, found = -1
    cdef uint64_t base
    with nogil:
        for i in range(start, stop):
            base = <uint64_t>i * STRIDE
            if _real(key, base, pf, pe, pc, pw) or _unit(key, base + 5) < pd:
                found = i
                break
    return found


def count_heralds(uint64_t key, int64_t start, int64_t stop, th):
    cdef double pf = th[0], pe = th[1], pc = th[2], pw = th[3], pd = th[4]
    cdef int64_t i, n_real = 0, n_dark = 0
    cdef uint64_t base
    with nogil:
        for i in range(start, stop):
            base = <uint64_t>i * STRIDE
            if _real(key, base, pf, pe, pc, pw):
                n_real += 1
            elif _unit(key, base + 5) < pd:
                n_dark += 1
    return n_real, n_dark
