"""Analytic noise models for the memory and communication qubits.

Single-frequency noise ``H = A cos(w t + phi) sigma_z / 2`` under the
tau - pi - 2tau - pi - tau echo sequence, exponential dephasing, and the
thermal-phonon error of the 411 nm conversion pulses.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import j0


@dataclass(frozen=True)
class EchoModel:
    A: float  # rad/s, noise amplitude on the qubit angular frequency
    omega: float  # rad/s
    T2: float  # s
    c: float = 0.0  # SPAM offset in the fit model

    def __post_init__(self):
        if self.A < 0 or self.omega <= 0 or self.T2 <= 0 or not 0 <= self.c <= 0.5:
            raise ValueError(f"invalid echo model {self}")

    @property
    def frequency(self):
        return self.omega / (2 * math.pi)


@dataclass(frozen=True)
class PhononModel:
    nbar: float
    eta: float

    def __post_init__(self):
        if self.nbar < 0 or not 0 < self.eta < 1:
            raise ValueError(f"invalid phonon model {self}")

    @property
    def lamb_dicke_ok(self):
        """False outside the regime where the leading-order error formula holds."""
        return self.nbar * self.eta**2 <= 0.1


def echo_phase(model, tau, varphi):
    """Accumulated phase between |0> and |1> after tau-pi-2tau-pi-tau.

    Vectorized over ``varphi``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    wt = model.omega * tau
    return (model.A / model.omega) * (
        -np.sin(varphi)
        + 2 * np.sin(wt + varphi)
        - 2 * np.sin(3 * wt + varphi)
        + np.sin(4 * wt + varphi)
    )


def segment_phases(model, tau, varphi):
    """Phase accrued in each free-evolution segment (tau, 2tau, tau).

    The echo pulses flip the sign of the middle segment; the signed sum is
    :func:`echo_phase`.
    """
    w, a = model.omega, model.A / model.omega
    edges = (0.0, tau, 3 * tau, 4 * tau)
    return tuple(
        a * (math.sin(w * t1 + varphi) - math.sin(w * t0 + varphi))
        for t0, t1 in zip(edges[:-1], edges[1:])
    )


def coherence_argument(model, tau):
    wt = model.omega * tau
    return 8 * model.A / model.omega * math.sin(wt / 2) ** 2 * math.sin(wt)


def echo_coherence(model, tau):
    """Phase-averaged coherence <cos(delta phi)> = J0(8A/w sin^2(wt/2) sin(wt))."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(j0(coherence_argument(model, tau)))


def storage_fidelity(model, T):
    """|+> storage fidelity fit model with exponential dephasing and SPAM offset."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("storage time must be positive")
    w = model.omega
    arg = 8 * model.A / w * np.sin(w * T / 8) ** 2 * np.sin(w * T / 4)
    F = (1 + j0(arg) * np.exp(-T / model.T2)) / 2 - model.c
    return float(F) if F.ndim == 0 else F


def zeeman_coherence(t, T2):
    if t < 0 or T2 <= 0:
        raise ValueError("need t >= 0 and T2 > 0")
    return math.exp(-t / T2)


def dephasing_flip_probability(t, T2):
    """Phase-flip probability whose average reproduces exp(-t/T2) coherence."""
    if math.isinf(T2):
        return 0.0
    return (1 - zeeman_coherence(t, T2)) / 2


def laguerre(n, x):
    """L_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be non-negative")
    prev, cur = 1.0, 1.0 - x
    if n == 0:
        return prev
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def rabi_factor(n, eta):
    """Carrier Rabi frequency of phonon number ``n`` relative to the bare one."""
    x = eta * eta
    return math.exp(-x / 2) * laguerre(n, x)


def conversion_error(model, adjacent_factor=1.0):
    """Round-trip (two 411 nm pi pulses) error from the thermal Rabi spread.

    ``adjacent_factor`` scales the result for coherent addition between
    back-to-back conversions; 1 means independent pulses.
    """
    if not model.lamb_dicke_ok:
        raise ValueError(f"nbar*eta^2 = {model.nbar * model.eta**2:.3f} outside Lamb-Dicke regime")
    return adjacent_factor * 2 * (math.pi / 2) ** 2 * model.nbar * (model.nbar + 1) * model.eta**4


def thermal_conversion_error_mc(model, rng, n_samples=100_000, n_cal=None):
    """Sampled round-trip error: thermal n, pulse calibrated for phonon ``n_cal``.

    Each pi pulse leaves cos^2((pi/2) r(n)/r(n_cal)) behind; two per round trip.
    """
    n_cal = round(model.nbar) if n_cal is None else n_cal
    p = 1.0 / (model.nbar + 1)
    ns = rng.geometric(p, size=n_samples) - 1
    r_cal = rabi_factor(n_cal, model.eta)
    table = {}
    errs = np.empty(n_samples)
    for i, n in enumerate(ns):
        e = table.get(n)
        if e is None:
            e = math.cos(math.pi / 2 * rabi_factor(int(n), model.eta) / r_cal) ** 2
            table[n] = e
        errs[i] = e
    return 2 * float(errs.mean())
