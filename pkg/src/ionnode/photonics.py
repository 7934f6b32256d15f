"""Photon emission, collection geometry, Zeeman phase and polarization analysis.

A :class:`JointState` is an ion (x) photon amplitude matrix. Before
collection the photon register is the dipole-mode basis
(sigma+, pi, sigma-); collection perpendicular to the magnetic field maps it
onto the polarization basis (H, V), where Jones matrices act.
"""

from dataclasses import dataclass
import math

import numpy as np

from .atom import (
    DIM, DOWN, P00, P_MINUS, P_PLUS, S_MINUS, S_PLUS, UP,
    IonState, basis_index, is_unitary,
)

MODES_DIPOLE = ("sigma+", "pi", "sigma-")
MODES_HV = ("H", "V")

_IM, _I0, _IP = basis_index(S_MINUS), basis_index(UP), basis_index(S_PLUS)
_ID = basis_index(DOWN)


class JointState:
    """Ion (x) photon amplitudes, shape ``(DIM, len(modes))``."""

    __slots__ = ("amps", "modes", "herald")

    def __init__(self, amps, modes, herald=False):
        amps = np.array(amps, dtype=np.complex128)
        if amps.shape != (DIM, len(modes)):
            raise ValueError(f"amplitude shape {amps.shape} does not match modes {modes}")
        amps.flags.writeable = False
        self.amps = amps
        self.modes = tuple(modes)
        self.herald = herald

    @classmethod
    def product(cls, ion, photon, modes=MODES_HV, herald=True):
        return cls(np.outer(ion.amplitudes, photon), modes, herald)

    @property
    def collected(self):
        return self.modes == MODES_HV

    def norm(self):
        return float(np.sum(np.abs(self.amps) ** 2))

    def mode_probability(self, mode):
        return float(np.sum(np.abs(self.amps[:, self.modes.index(mode)]) ** 2))

    def ion_branch(self, mode):
        """Unnormalized ion amplitudes conditioned on ``mode``."""
        return self.amps[:, self.modes.index(mode)]

    def map_ion(self, full):
        """Apply a DIM x DIM ion operator to every photon branch."""
        return JointState(full @ self.amps, self.modes, self.herald)

    def ion_populations(self):
        return np.sum(np.abs(self.amps) ** 2, axis=1)


@dataclass(frozen=True)
class EmissionEvent:
    t_emit: float
    channel: str  # "coherent" or "leakage"


def emit_entangled(excited):
    """Spontaneous decay of |P1/2,0,0> into the polarization-entangled state.

    Returns (|1,-1>|s+> + |1,0>|pi> + |1,+1>|s->)/sqrt(3), carrying the
    excited amplitude's phase.
    """
    pop = excited.population(P00)
    if abs(pop - 1.0) > 1e-12:
        raise ValueError(f"excited population {pop} is not 1")
    a = excited.amplitude(P00) / math.sqrt(3.0)
    amps = np.zeros((DIM, 3), dtype=np.complex128)
    amps[_IM, 0] = a
    amps[_I0, 1] = a
    amps[_IP, 2] = a
    return JointState(amps, MODES_DIPOLE)


LEAK_CHANNELS = ("pi", "sigma-down", "sigma-up")


def emit_leaked(channel):
    """One decay channel of the leaked excitation in P1/2 F=1, m=+-1.

    The leaked population is a symmetric superposition of m=+-1 (a tilted
    linear polarization drives both components in phase). Its decays are
    split in thirds: a pi photon leaving the symmetric Zeeman superposition,
    or a sigma photon leaving |0,0> or |1,0>.
    """
    amps = np.zeros((DIM, 3), dtype=np.complex128)
    if channel == "pi":
        amps[_IM, 1] = amps[_IP, 1] = 1 / math.sqrt(2.0)
    elif channel == "sigma-down":
        amps[_ID, 0] = 1.0
    elif channel == "sigma-up":
        amps[_I0, 0] = 1.0
    else:
        raise ValueError(f"unknown leakage channel {channel!r}")
    return JointState(amps, MODES_DIPOLE)


def leaked_excited_state():
    return IonState.superposition({P_MINUS: 1.0, P_PLUS: 1.0})


def collect_perpendicular(joint):
    """Project onto photons collected perpendicular to the field.

    pi -> V with unit amplitude, sigma+- -> H with amplitude 1/sqrt(2). The
    result is renormalized (heralded); the second return value is the
    collection-conditioned branching weight, e.g. 2/3 for the fresh
    three-branch emission.
    """
    if joint.collected:
        raise RuntimeError("photon already collected")
    h = (joint.amps[:, 0] + joint.amps[:, 2]) / math.sqrt(2.0)
    v = joint.amps[:, 1]
    amps = np.column_stack([h, v])
    before = joint.norm()
    after = float(np.sum(np.abs(amps) ** 2))
    if after == 0.0:
        raise ValueError("no amplitude survives collection")
    return JointState(amps / math.sqrt(after), MODES_HV, herald=True), after / before


def zeeman_phases(t, delta_f):
    """Phase factors on |1,-1>, |1,+1> for the symmetric +-delta_f/2 convention."""
    phi = math.pi * delta_f * t
    return np.exp(1j * phi), np.exp(-1j * phi)


def zeeman_evolve(state, t, delta_f):
    """Free Zeeman evolution for time ``t``; works on IonState or JointState."""
    if t < 0:
        raise ValueError("negative evolution time")
    pm, pp = zeeman_phases(t, delta_f)
    diag = np.ones(DIM, dtype=np.complex128)
    diag[_IM] = pm
    diag[_IP] = pp
    if isinstance(state, JointState):
        return JointState(diag[:, None] * state.amps, state.modes, state.herald)
    return IonState(diag * state.amplitudes)


def retarder(retardance, angle):
    """Jones matrix of a linear retarder with its fast axis at ``angle``."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, s], [-s, c]])
    core = np.diag([np.exp(-0.5j * retardance), np.exp(0.5j * retardance)])
    return rot.T @ core @ rot


def half_wave_plate(angle):
    return retarder(math.pi, angle)


def quarter_wave_plate(angle):
    return retarder(math.pi / 2, angle)


def polarization_rotation(angle):
    """Rigid rotation of the polarization frame (objective misalignment)."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def waveplate_rotation(hwp_angle, qwp_angle):
    """Jones map of the analysis optics: HWP first, then QWP."""
    return quarter_wave_plate(qwp_angle) @ half_wave_plate(hwp_angle)


def apply_jones(joint, jones):
    if not joint.collected:
        raise RuntimeError("Jones maps act on collected (H, V) photons")
    jones = np.asarray(jones)
    if not is_unitary(jones):
        raise ValueError("Jones matrix is not unitary")
    return JointState(joint.amps @ jones.T, joint.modes, joint.herald)


def measure_pbs(joint, rng):
    """Sample the PBS port with Born probabilities.

    Returns ``(outcome, ion_state)`` where the ion state is the renormalized
    conditional branch.
    """
    if not joint.herald:
        raise RuntimeError("cannot measure an unheralded photon")
    p_h = joint.mode_probability("H") / joint.norm()
    u = rng.random()
    outcome = "H" if u < p_h else "V"
    branch = joint.ion_branch(outcome)
    n = np.linalg.norm(branch)
    if n == 0.0:  # measure-zero edge; the other port has probability one
        outcome = "V" if outcome == "H" else "H"
        branch = joint.ion_branch(outcome)
        n = np.linalg.norm(branch)
    return outcome, IonState(branch / n)
