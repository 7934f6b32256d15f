"""Crosstalk on a neighbouring ion from isotropically scattered fluorescence."""

from dataclasses import dataclass
import math

from scipy.constants import c as C_LIGHT, hbar as HBAR

YB_WAVELENGTH = 369.5e-9
YB_GAMMA = 1 / 8e-9


@dataclass(frozen=True)
class ScatterScenario:
    """Fluorescing ion at distance ``d`` from the target.

    ``scatter_rate`` is the emitted photon rate (rho*Gamma); ``Delta`` is the
    target transition's detuning from the light, 0 for resonant.
    """

    wavelength: float
    Gamma: float
    scatter_rate: float
    d: float
    tau: float
    Delta: float = 0.0

    def __post_init__(self):
        if self.wavelength <= 0 or self.Gamma <= 0:
            raise ValueError("wavelength and Gamma must be positive")
        if self.scatter_rate < 0 or self.tau < 0 or self.Delta < 0 or self.d < 0:
            raise ValueError("rates, durations and distances must be non-negative")

    @classmethod
    def doppler(cls, rho, Gamma=YB_GAMMA, d=400e-6, tau=0.5, wavelength=YB_WAVELENGTH):
        return cls(wavelength, Gamma, rho * Gamma, d, tau)


def _check_distance(d):
    if d <= 0:
        raise ValueError("ion separation must be positive")


def fluorescence_intensity(s):
    _check_distance(s.d)
    omega0 = 2 * math.pi * C_LIGHT / s.wavelength
    return HBAR * omega0 / (4 * math.pi * s.d**2) * s.scatter_rate


def saturation_intensity(wavelength, Gamma):
    omega0 = 2 * math.pi * C_LIGHT / wavelength
    return HBAR * omega0**3 * Gamma / (12 * math.pi * C_LIGHT**2)


def induced_rabi_sq(s):
    """Omega^2 driven on the target by the fluorescence field."""
    _check_distance(s.d)
    return 3 * s.wavelength**2 * s.scatter_rate * s.Gamma / (8 * math.pi**2 * s.d**2)


def excitation_prob(omega_sq, Gamma, Delta=0.0):
    if omega_sq < 0 or Gamma < 0 or Delta < 0:
        raise ValueError("inputs must be non-negative")
    if Delta == 0:
        return omega_sq / (2 * omega_sq + Gamma**2)
    return omega_sq / (4 * Delta**2)


def far_detuned_suppression(Gamma, Delta):
    """Ratio of far-detuned to weak-drive resonant excitation, Gamma^2/(4 Delta^2)."""
    return Gamma**2 / (4 * Delta**2)


def per_photon_error(wavelength, d):
    """Resonant error probability per scattered photon, 3 lambda^2 / (8 pi^2 d^2)."""
    _check_distance(d)
    return 3 * wavelength**2 / (8 * math.pi**2 * d**2)


def scattering_error(s):
    """Return ``(raw, clamped)``: raw eps = rho' Gamma tau and 1 - exp(-eps).

    Resonant targets use the weak-excitation form (photon count times the
    geometric factor); far-detuned targets use rho' = Omega^2 / (4 Delta^2).
    """
    if s.Delta == 0:
        raw = per_photon_error(s.wavelength, s.d) * s.scatter_rate * s.tau
    else:
        raw = excitation_prob(induced_rabi_sq(s), s.Gamma, s.Delta) * s.Gamma * s.tau
    return raw, -math.expm1(-raw)


def compound_error(eps, k):
    """Error after k pumping photons plus the entangling photon."""
    if not 0 <= eps <= 1:
        raise ValueError(f"eps={eps} is not a probability")
    if k < 0:
        raise ValueError("k must be non-negative")
    return 1 - (1 - eps) ** (k + 1)
