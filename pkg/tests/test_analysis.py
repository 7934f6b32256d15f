import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionnode import NoiseConfig, noiseless
from ionnode.analysis import (
    ProbTable, binomial_error, error_budget, fidelity_bound, fit_conversion, fit_phase_scan,
    fit_storage, mub_average, rate_budget,
)
from ionnode.config import ECHO_A_CALIBRATED
from ionnode.decoherence import EchoModel, storage_fidelity

FIG2 = ProbTable.from_conditionals((0.964, 0.077), (0.959, 0.091), n_per_outcome=500)


def test_bound_on_reference_correlations():
    value, sigma = fidelity_bound(FIG2)
    assert value == pytest.approx(0.880, abs=0.002)
    assert sigma == pytest.approx(0.010, abs=0.002)


def test_bound_perfect_correlations():
    perfect = ProbTable.from_conditionals((1.0, 0.0), (1.0, 0.0))
    assert fidelity_bound(perfect)[0] == pytest.approx(1.0, abs=1e-15)


probs = st.floats(0, 1)


@settings(max_examples=500, deadline=None)
@given(probs, probs, probs, probs, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_bound_never_exceeds_one(a, b, c, d, ph1, ph2):
    t = ProbTable(
        {"diagonal": np.array([[b, a], [1 - b, 1 - a]]), "offdiagonal": np.array([[d, c], [1 - d, 1 - c]])},
        {"diagonal": (ph1, 1 - ph1), "offdiagonal": (ph2, 1 - ph2)},
        {"diagonal": (100, 100), "offdiagonal": (100, 100)},
    )
    v = fidelity_bound(t)[0]
    assert v <= 1 + 1e-12
    if v > 1 - 1e-9:
        assert a == pytest.approx(1) and b == pytest.approx(0) and c == pytest.approx(1) and d == pytest.approx(0)


def test_bound_needs_both_bases():
    t = ProbTable({"diagonal": np.eye(2)}, {"diagonal": (0.5, 0.5)}, {"diagonal": (10, 10)})
    with pytest.raises(ValueError):
        fidelity_bound(t)


def test_prob_table_validation():
    with pytest.raises(ValueError):
        ProbTable({"diagonal": np.ones((2, 2))}, {"diagonal": (0.5, 0.5)}, {"diagonal": (1, 1)})
    with pytest.raises(ValueError):
        ProbTable.from_counts({"diagonal": [[3, 0], [4, 0]]})


def test_doubling_counts_shrinks_error():
    counts = {"diagonal": np.array([[40, 480], [460, 20]]), "offdiagonal": np.array([[45, 470], [455, 30]])}
    s1 = fidelity_bound(ProbTable.from_counts(counts))[1]
    s2 = fidelity_bound(ProbTable.from_counts({k: 2 * v for k, v in counts.items()}))[1]
    assert s1 / s2 == pytest.approx(math.sqrt(2), rel=0.01)


def test_binomial_error():
    assert binomial_error(500, 1000) == pytest.approx(0.0158, abs=1e-4)
    assert binomial_error(482, 500) == pytest.approx(0.008, abs=0.001)
    assert binomial_error(0, 10) == 0
    with pytest.raises(ValueError):
        binomial_error(11, 10)
    with pytest.raises(ValueError):
        binomial_error(0, 0)


def test_mub_average():
    mean, se = mub_average([(0.9, 100)] * 6)
    assert mean == pytest.approx(0.9)
    assert se == pytest.approx(math.sqrt(0.9 * 0.1 / 600))
    mean, se = mub_average([(0.84, 1500)] * 6)
    assert se == pytest.approx(0.004, abs=2e-4)
    mean, _ = mub_average([(1.0, 1), (0.0, 3), (0.5, 2), (0.5, 2), (0.5, 1), (0.5, 1)])
    assert mean == pytest.approx(4 / 10)
    with pytest.raises(ValueError):
        mub_average([(0.9, 10)] * 5)


T = np.linspace(0.01, 1.0, 40)


def test_fit_storage_exact_recovery():
    m = EchoModel(ECHO_A_CALIBRATED, 2 * math.pi * 57.3, 2.8, 0.05)
    r = fit_storage(T, storage_fidelity(m, T))
    assert r.converged
    for name, true in (("A", m.A), ("omega", m.omega), ("T2", m.T2), ("c", m.c)):
        assert r[name] == pytest.approx(true, rel=1e-6)


def test_fit_storage_noisy_recovery():
    m = EchoModel(ECHO_A_CALIBRATED, 2 * math.pi * 57.3, 2.8, 0.05)
    rng = np.random.default_rng(8)
    for _ in range(5):
        F = storage_fidelity(m, T) + rng.normal(0, 0.01, T.size)
        r = fit_storage(T, F, np.full(T.size, 0.01))
        assert r.converged
        assert r.extra["frequency"] == pytest.approx(57.3, abs=0.5)
        assert r["T2"] == pytest.approx(2.8, rel=0.3)
        assert all(e >= 0 for e in r.errors.values())


def test_fit_storage_degenerate_frequency():
    m = EchoModel(0.0, 1.0, 2.8, 0.05)
    r = fit_storage(T, storage_fidelity(m, T))
    assert "omega" in r.degenerate and r["A"] == 0
    assert r["T2"] == pytest.approx(2.8, rel=1e-6)


def test_fit_storage_needs_points():
    with pytest.raises(ValueError):
        fit_storage(T[:5], T[:5])


def test_fit_conversion_exact():
    N = np.arange(1, 7)
    r = fit_conversion(N, 0.97 * (1 - 0.031) ** N)
    assert r["F0"] == pytest.approx(0.97, abs=1e-9)
    assert r["eps"] == pytest.approx(0.031, abs=1e-9)
    flat = fit_conversion(N, np.full(6, 0.9))
    assert flat["eps"] == pytest.approx(0, abs=1e-12) and flat["F0"] == pytest.approx(0.9)


def test_fit_conversion_binomial_noise():
    rng = np.random.default_rng(9)
    N = np.arange(1, 11)
    n = 10_000
    for _ in range(5):
        F = rng.binomial(n, 0.97 * (1 - 0.031) ** N) / n
        assert fit_conversion(N, F)["eps"] == pytest.approx(0.031, abs=0.003)


def test_fit_conversion_errors():
    with pytest.raises(ValueError):
        fit_conversion([1, 2, 3], [0.9, 0.0, 0.8])
    with pytest.raises(ValueError):
        fit_conversion([1, 1, 2], [0.9, 0.9, 0.8])


PHI = np.linspace(0, 2 * math.pi, 12, endpoint=False)


def test_fit_phase_scan_exact():
    r = fit_phase_scan(PHI, 0.5 + 0.4 * np.cos(PHI - 1.0))
    assert r["mean"] == pytest.approx(0.5, abs=1e-9)
    assert r["amplitude"] == pytest.approx(0.4, abs=1e-9)
    assert r["phase"] == pytest.approx(1.0, abs=1e-9)
    assert r.extra["max"] == pytest.approx(0.9, abs=1e-9)


def test_fit_phase_scan_constant():
    r = fit_phase_scan(PHI, np.full(12, 0.3))
    assert r["amplitude"] == 0 and math.isnan(r["phase"]) and "phase" in r.degenerate


def test_fit_phase_scan_span():
    with pytest.raises(ValueError):
        fit_phase_scan(np.linspace(0, 1, 8), np.ones(8))
    with pytest.raises(ValueError):
        fit_phase_scan(PHI[:4], np.ones(4))


def test_rate_budget():
    assert rate_budget(1.6e4, 0.013, 2 / 3, 0.15, 0.30, 0.85) == pytest.approx(5.3, abs=0.1)
    assert rate_budget(1.6e4, 0, 2 / 3, 0.15, 0.30, 0.85) == 0
    assert rate_budget(1.6e4, 1, 1, 1, 1, 1) == 1.6e4
    with pytest.raises(ValueError):
        rate_budget(1.6e4, 1.2, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        rate_budget(0, 1, 1, 1, 1, 1)


def test_error_budget_defaults():
    terms = {t.name: t.infidelity for t in error_budget(NoiseConfig())}
    assert terms["dark_count"] == pytest.approx(3200 * 60e-9 * 100)
    assert terms["spam"] == pytest.approx(0.02)
    assert terms["polarization"] == pytest.approx(0.032)
    assert terms["misalignment"] == pytest.approx(0.02)
    assert terms["jitter"] == pytest.approx((2 * math.pi * 16e6 * 2e-9) ** 2)
    assert terms["zeeman_t2"] == pytest.approx(1 - math.exp(-13 / 530))


def test_error_budget_zero_noise_and_emccd():
    assert all(t.infidelity == 0 for t in error_budget(noiseless()))
    spam = {t.name: t.infidelity for t in error_budget(NoiseConfig().with_detector("emccd"))}["spam"]
    assert spam == pytest.approx(0.05)
