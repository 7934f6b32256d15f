"""Pure numpy implementation of the heralding kernels.

Bit-identical to the compiled ``_kernels`` module: both evaluate the same
SplitMix64 outputs and compare them against the same precomputed
thresholds, so the choice of backend never changes a simulation result.
"""

import numpy as np

from .rng import GAMMA, _MIX1, _MIX2

ATTEMPT_STRIDE = 8
_BLOCK = 4096

_G = np.uint64(GAMMA)
_M1 = np.uint64(_MIX1)
_M2 = np.uint64(_MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / (1 << 53)


def _splitmix(key, counters):
    z = np.uint64(key) + (counters + np.uint64(1)) * _G
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def uniforms(key, start, n):
    """``n`` consecutive draws of stream ``key`` beginning at ``start``."""
    counters = np.arange(start, start + n, dtype=np.uint64)
    return (_splitmix(key, counters) >> _S11).astype(np.float64) * _INV53


def _draw(key, attempts, slot):
    return uniforms_at(key, attempts * np.uint64(ATTEMPT_STRIDE) + np.uint64(slot))


def uniforms_at(key, counters):
    return (_splitmix(key, counters) >> _S11).astype(np.float64) * _INV53


def _herald_masks(key, attempts, th):
    p_pump_fail, p_excite, p_collect, p_window, p_dark = th
    real = _draw(key, attempts, 0) >= p_pump_fail
    real &= _draw(key, attempts, 2) < p_excite
    real &= _draw(key, attempts, 3) < p_collect
    real &= _draw(key, attempts, 4) < p_window
    dark = _draw(key, attempts, 5) < p_dark
    return real, dark


def first_herald(key, start, stop, th):
    """Index of the first heralding attempt in ``[start, stop)``, or -1."""
    pos = start
    while pos < stop:
        n = min(_BLOCK, stop - pos)
        attempts = np.arange(pos, pos + n, dtype=np.uint64)
        real, dark = _herald_masks(key, attempts, th)
        hit = np.flatnonzero(real | dark)
        if hit.size:
            return int(pos + hit[0])
        pos += n
    return -1


def count_heralds(key, start, stop, th):
    """Return ``(real, dark_only)`` herald counts over ``[start, stop)``."""
    n_real = 0
    n_dark = 0
    pos = start
    while pos < stop:
        n = min(_BLOCK * 16, stop - pos)
        attempts = np.arange(pos, pos + n, dtype=np.uint64)
        real, dark = _herald_masks(key, attempts, th)
        n_real += int(np.count_nonzero(real))
        n_dark += int(np.count_nonzero(dark & ~real))
        pos += n
    return n_real, n_dark
