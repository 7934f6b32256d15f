import math

import numpy as np
import pytest
from scipy.constants import c as C, h as H

from ionnode.crosstalk import (
    YB_GAMMA, YB_WAVELENGTH, ScatterScenario, compound_error, excitation_prob,
    far_detuned_suppression, fluorescence_intensity, induced_rabi_sq, saturation_intensity,
    scattering_error,
)

ENT = ScatterScenario(YB_WAVELENGTH, YB_GAMMA, 1.6e4, 12e-6, 0.1)


def test_fluorescence_intensity():
    # hbar*omega0 = 5.376e-19 J, 4 pi d^2 = 1.810e-9 m^2, times 1.6e4 photons/s
    assert fluorescence_intensity(ENT) == pytest.approx(4.75e-6, rel=0.01)
    far = ScatterScenario(YB_WAVELENGTH, YB_GAMMA, 1.6e4, 24e-6, 0.1)
    assert fluorescence_intensity(far) == pytest.approx(fluorescence_intensity(ENT) / 4)
    assert fluorescence_intensity(ScatterScenario(YB_WAVELENGTH, YB_GAMMA, 0, 12e-6, 0.1)) == 0
    with pytest.raises(ValueError):
        fluorescence_intensity(ScatterScenario(YB_WAVELENGTH, YB_GAMMA, 1, 0, 0.1))


def test_saturation_intensity():
    isat = saturation_intensity(YB_WAVELENGTH, YB_GAMMA)
    assert isat == pytest.approx(math.pi * H * C * YB_GAMMA / (3 * YB_WAVELENGTH**3), rel=1e-12)
    assert 100 < isat < 1000  # about 51 mW/cm^2
    assert saturation_intensity(YB_WAVELENGTH, 2 * YB_GAMMA) == pytest.approx(2 * isat)


def test_rabi_identity_random_scenarios():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        s = ScatterScenario(rng.uniform(200e-9, 1e-6), rng.uniform(1e6, 1e9),
                            rng.uniform(1, 1e8), rng.uniform(1e-6, 1e-3), 1.0)
        ratio = fluorescence_intensity(s) / saturation_intensity(s.wavelength, s.Gamma)
        assert induced_rabi_sq(s) == pytest.approx(s.Gamma**2 / 2 * ratio, rel=1e-12)


def test_rabi_scaling():
    s2 = ScatterScenario(2 * YB_WAVELENGTH, YB_GAMMA, 1.6e4, 12e-6, 0.1)
    assert induced_rabi_sq(s2) == pytest.approx(4 * induced_rabi_sq(ENT))
    d = ScatterScenario.doppler(1 / 6)
    lam = d.wavelength
    assert induced_rabi_sq(d) / d.Gamma**2 == pytest.approx(3 * lam**2 / 6 / (8 * math.pi**2 * d.d**2))


def test_excitation_prob():
    assert excitation_prob(1e40, 1.0) == pytest.approx(0.5)
    assert excitation_prob(0.0, 1.0) == 0
    G, D = 2 * math.pi * 10e6, 2 * math.pi * 10e12
    weak = 1e-3
    ratio = excitation_prob(weak, G, D) / excitation_prob(weak, G)
    assert ratio == pytest.approx(far_detuned_suppression(G, D), rel=1e-6)
    assert far_detuned_suppression(G, D) == pytest.approx(2.5e-13)
    for w in np.geomspace(1e-3, 1e30, 50):
        assert excitation_prob(w, 1e8) <= 0.5


def test_scattering_error_examples():
    raw, clamped = scattering_error(ENT)
    assert raw == pytest.approx(0.058, abs=0.001)
    assert clamped == pytest.approx(-math.expm1(-raw))
    raw, _ = scattering_error(ScatterScenario.doppler(1 / 6))
    assert raw == pytest.approx(0.34, abs=0.005)
    assert scattering_error(ScatterScenario(YB_WAVELENGTH, YB_GAMMA, 1.6e4, 12e-6, 0.0)) == (0.0, 0.0)


def test_scattering_error_scaling():
    base = scattering_error(ENT)[0]
    for kw, factor in (({"wavelength": 2 * YB_WAVELENGTH}, 4), ({"d": 24e-6}, 0.25), ({"tau": 0.3}, 3)):
        args = dict(wavelength=YB_WAVELENGTH, Gamma=YB_GAMMA, scatter_rate=1.6e4, d=12e-6, tau=0.1)
        args.update(kw)
        assert scattering_error(ScatterScenario(**args))[0] == pytest.approx(factor * base, rel=1e-12)


def test_compound_error():
    assert compound_error(0.06, 11) == pytest.approx(0.52, abs=0.005)
    assert compound_error(0.0, 11) == 0
    assert compound_error(0.2, 0) == pytest.approx(0.2)
    grid = np.linspace(0, 1, 11)
    for k in range(5):
        v = [compound_error(e, k) for e in grid]
        assert all(a <= b for a, b in zip(v, v[1:]))
        assert all(compound_error(e, k) <= compound_error(e, k + 1) for e in grid)
    with pytest.raises(ValueError):
        compound_error(1.5, 2)
