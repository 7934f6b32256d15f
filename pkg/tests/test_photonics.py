import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionnode.atom import (
    DOWN, P00, S_MINUS, S_PLUS, UP, IonState, embed, fidelity, is_unitary, rotation,
    QubitEncoding,
)
from ionnode.photonics import (
    MODES_DIPOLE, JointState, apply_jones, collect_perpendicular, emit_entangled, emit_leaked,
    half_wave_plate, measure_pbs, polarization_rotation, quarter_wave_plate, waveplate_rotation,
    zeeman_evolve, zeeman_phases,
)
from ionnode.rng import Stream

from conftest import binomial_ok, chi2_ok

SYM = IonState.superposition({S_MINUS: 1, S_PLUS: 1})


def precursor():
    joint, _ = collect_perpendicular(emit_entangled(IonState.basis(P00)))
    return joint


def dipole(ion, mode):
    photon = np.zeros(3)
    photon[MODES_DIPOLE.index(mode)] = 1
    return JointState.product(ion, photon, MODES_DIPOLE, herald=False)


def test_emit_entangled_amplitudes():
    j = emit_entangled(IonState.basis(P00))
    a = 1 / math.sqrt(3)
    assert j.ion_branch("sigma+")[1] == pytest.approx(a)
    assert j.ion_branch("pi")[2] == pytest.approx(a)
    assert j.ion_branch("sigma-")[3] == pytest.approx(a)
    for m in MODES_DIPOLE:
        assert j.mode_probability(m) == pytest.approx(1 / 3)
    np.testing.assert_allclose(j.ion_populations()[1:4], [1 / 3] * 3)


def test_emit_entangled_requires_excited_state():
    with pytest.raises(ValueError):
        emit_entangled(IonState.basis(UP))


def test_collection_gives_precursor_state():
    j, w = collect_perpendicular(emit_entangled(IonState.basis(P00)))
    assert w == pytest.approx(2 / 3, abs=1e-12)
    assert j.mode_probability("H") == pytest.approx(0.5)
    assert j.mode_probability("V") == pytest.approx(0.5)
    expected = np.zeros((10, 2), complex)
    expected[:, 0] = SYM.amplitudes / math.sqrt(2)
    expected[2, 1] = 1 / math.sqrt(2)
    assert abs(np.vdot(expected, j.amps)) ** 2 == pytest.approx(1, abs=1e-12)


def test_collection_single_branches():
    j, w = collect_perpendicular(dipole(IonState.basis(UP), "pi"))
    assert w == pytest.approx(1) and j.mode_probability("V") == pytest.approx(1)
    j, w = collect_perpendicular(dipole(IonState.basis(S_PLUS), "sigma-"))
    assert w == pytest.approx(0.5) and j.mode_probability("H") == pytest.approx(1)
    with pytest.raises(RuntimeError):
        collect_perpendicular(j)


def test_collection_commutes_with_ion_unitaries():
    rng = np.random.default_rng(1)
    for _ in range(20):
        amps = rng.normal(size=(10, 3)) + 1j * rng.normal(size=(10, 3))
        j = JointState(amps / np.linalg.norm(amps), MODES_DIPOLE)
        u = embed(rotation(*rng.uniform(0, 6, 2)), QubitEncoding.S_QUBIT)
        a, _ = collect_perpendicular(j.map_ion(u))
        b, _ = collect_perpendicular(j)
        np.testing.assert_allclose(a.amps, b.map_ion(u).amps, atol=1e-10)


def test_leak_channels():
    pi, w = collect_perpendicular(emit_leaked("pi"))
    assert w == 1 and fidelity(IonState(pi.ion_branch("V")), SYM) == pytest.approx(1)
    for ch, level in (("sigma-down", DOWN), ("sigma-up", UP)):
        j, w = collect_perpendicular(emit_leaked(ch))
        assert w == pytest.approx(0.5)
        assert abs(j.ion_branch("H")[0 if level == DOWN else 2]) == pytest.approx(1)
    with pytest.raises(ValueError):
        emit_leaked("sigma")


def test_zeeman_identity_and_period():
    j = precursor()
    np.testing.assert_allclose(zeeman_evolve(j, 0.0, 16e6).amps, j.amps)
    # a full period of the pair's relative phase returns the pair state; each
    # of m=+-1 picks up -1 against |1,0>, so only the pair is periodic
    assert fidelity(zeeman_evolve(SYM, 1 / 16e6, 16e6), SYM) == pytest.approx(1, abs=1e-9)
    assert fidelity(zeeman_evolve(SYM, 0.5 / 16e6, 16e6), SYM) == pytest.approx(0, abs=1e-9)


def test_zeeman_relative_phase_across_window():
    pm, pp = zeeman_phases(60e-9, 16e6)
    spread = np.angle(pm / pp) % (2 * math.pi)
    assert spread == pytest.approx((2 * math.pi * 16e6 * 60e-9) % (2 * math.pi), abs=1e-9)
    assert 2 * math.pi * 16e6 * 60e-9 == pytest.approx(6.03, abs=0.01)


def test_zeeman_composition():
    j = precursor()
    a = zeeman_evolve(zeeman_evolve(j, 13e-9, 16e6), 29e-9, 16e6)
    np.testing.assert_allclose(a.amps, zeeman_evolve(j, 42e-9, 16e6).amps, atol=1e-12)


def test_zeeman_leaves_clock_states():
    s = IonState.superposition({UP: 1, DOWN: 1j})
    np.testing.assert_array_equal(zeeman_evolve(s, 1e-6, 16e6).amplitudes, s.amplitudes)


def test_waveplate_examples():
    j = waveplate_rotation(0, 0)
    assert np.allclose(np.abs(j), np.eye(2))
    out = waveplate_rotation(math.pi / 8, 0) @ np.array([1, 0])
    assert abs(out[0]) ** 2 == pytest.approx(0.5, abs=1e-12)
    assert abs(out[1]) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_half_wave_plates_map_h_to_v():
    h = np.array([1, 0])
    assert abs((half_wave_plate(math.pi / 4) @ h)[1]) ** 2 == pytest.approx(1, abs=1e-12)
    two = half_wave_plate(3 * math.pi / 8) @ half_wave_plate(math.pi / 8)
    assert abs((two @ h)[1]) ** 2 == pytest.approx(1, abs=1e-12)
    # a half-wave plate is its own inverse up to phase: the same plate twice is identity
    same = half_wave_plate(math.pi / 8) @ half_wave_plate(math.pi / 8)
    assert abs((same @ h)[0]) ** 2 == pytest.approx(1, abs=1e-12)


@settings(max_examples=1000, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_jones_maps_unitary(a, b):
    assert is_unitary(waveplate_rotation(a, b))
    assert is_unitary(quarter_wave_plate(a) @ polarization_rotation(b))


def test_apply_jones_requires_collection():
    with pytest.raises(RuntimeError):
        apply_jones(emit_entangled(IonState.basis(P00)), np.eye(2))


def test_measure_pbs_branches():
    j = precursor()
    rng = Stream(11)
    seen = set()
    for _ in range(50):
        outcome, ion = measure_pbs(j, rng)
        seen.add(outcome)
        target = IonState.basis(UP) if outcome == "V" else SYM
        assert fidelity(ion, target) == pytest.approx(1, abs=1e-12)
    assert seen == {"H", "V"}


def test_measure_pbs_born_rule():
    rng = Stream(12)
    j = precursor()
    n = 100_000
    k = sum(measure_pbs(j, rng)[0] == "H" for _ in range(n))
    assert binomial_ok(k, n, 0.5)
    tilted = apply_jones(j, polarization_rotation(0.3))
    p_h = tilted.mode_probability("H")
    k = sum(measure_pbs(tilted, rng)[0] == "H" for _ in range(n))
    assert chi2_ok([k, n - k], [p_h, 1 - p_h])


def test_measure_pbs_zero_branch_uses_other_port():
    amps = np.zeros((10, 2), complex)
    amps[2, 1] = 1

    class Always:
        def random(self):
            return 0.0  # would pick H, which has zero amplitude

    outcome, ion = measure_pbs(JointState(amps, ("H", "V"), herald=True), Always())
    assert outcome == "V" and ion.population(UP) == pytest.approx(1)
