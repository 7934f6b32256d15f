"""Level structure of 171Yb+ and state algebra on the 10-level protocol space.

Only the levels the protocol touches are represented::

    0  S1/2 F=0 m=0    |down>  (also the memory |0>)
    1  S1/2 F=1 m=-1
    2  S1/2 F=1 m=0    |up>    (also the memory |1>)
    3  S1/2 F=1 m=+1
    4  P1/2 F=0 m=0    (excited by the ultrafast pulse)
    5  P1/2 F=1 m=-1
    6  P1/2 F=1 m=0
    7  P1/2 F=1 m=+1
    8  F7/2 F=3 m=0    |0'>
    9  F7/2 F=4 m=0    |1'>

Global phases are never canonicalized; compare states with :func:`fidelity`.
"""

from dataclasses import dataclass
import enum

import numpy as np

UNITARY_TOL = 1e-12


class Manifold(enum.Enum):
    S12 = "S1/2"
    P12 = "P1/2"
    F72 = "F7/2"


@dataclass(frozen=True)
class LevelLabel:
    manifold: Manifold
    F: int
    mF: int

    def __post_init__(self):
        if self.F < 0 or abs(self.mF) > self.F:
            raise ValueError(f"invalid quantum numbers F={self.F}, mF={self.mF}")

    def __str__(self):
        return f"{self.manifold.value}|{self.F},{self.mF:+d}>"


LEVELS = (
    LevelLabel(Manifold.S12, 0, 0),
    LevelLabel(Manifold.S12, 1, -1),
    LevelLabel(Manifold.S12, 1, 0),
    LevelLabel(Manifold.S12, 1, 1),
    LevelLabel(Manifold.P12, 0, 0),
    LevelLabel(Manifold.P12, 1, -1),
    LevelLabel(Manifold.P12, 1, 0),
    LevelLabel(Manifold.P12, 1, 1),
    LevelLabel(Manifold.F72, 3, 0),
    LevelLabel(Manifold.F72, 4, 0),
)
DIM = len(LEVELS)
_INDEX = {label: i for i, label in enumerate(LEVELS)}

DOWN, S_MINUS, UP, S_PLUS, P00, P_MINUS, P10, P_PLUS, F_ZERO, F_ONE = LEVELS


def basis_index(label):
    try:
        return _INDEX[label]
    except KeyError:
        raise ValueError(f"{label} is not a protocol level") from None


def level_at(index):
    if not 0 <= index < DIM:
        raise ValueError(f"level index {index} out of range")
    return LEVELS[index]


class QubitEncoding(enum.Enum):
    """Two-level encodings; ``value`` is the (|0>, |1>) label pair."""

    S_QUBIT = (DOWN, UP)
    F_QUBIT = (F_ZERO, F_ONE)
    ZEEMAN_PAIR = (S_MINUS, S_PLUS)

    @property
    def levels(self):
        return self.value


class IonState:
    """Amplitude vector over :data:`LEVELS`. Immutable."""

    __slots__ = ("_amps",)

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=np.complex128)
        if amps.shape != (DIM,):
            raise ValueError(f"expected {DIM} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        self._amps = amps

    @classmethod
    def basis(cls, label):
        amps = np.zeros(DIM, dtype=np.complex128)
        amps[basis_index(label)] = 1.0
        return cls(amps)

    @classmethod
    def superposition(cls, terms):
        """Normalized state from a ``{label: amplitude}`` mapping."""
        amps = np.zeros(DIM, dtype=np.complex128)
        for label, a in terms.items():
            amps[basis_index(label)] += a
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero state")
        return cls(amps / norm)

    @property
    def amplitudes(self):
        return self._amps

    def amplitude(self, label):
        return self._amps[basis_index(label)]

    def population(self, *labels):
        return float(sum(abs(self._amps[basis_index(l)]) ** 2 for l in labels))

    def norm(self):
        return float(np.vdot(self._amps, self._amps).real)

    def normalized(self):
        return IonState(self._amps / np.sqrt(self.norm()))

    def __repr__(self):
        terms = [f"({a:.3g}){LEVELS[i]}" for i, a in enumerate(self._amps) if abs(a) > 1e-12]
        return "IonState(" + " + ".join(terms) + ")"


def inner_product(a, b):
    """<a|b>, conjugate-linear in ``a``."""
    va = a.amplitudes if isinstance(a, IonState) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, IonState) else np.asarray(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch {va.shape} vs {vb.shape}")
    return complex(np.vdot(va, vb))


def fidelity(a, b):
    return abs(inner_product(a, b)) ** 2


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def rotation(area, phase=0.0):
    """Resonant Rabi rotation exp(-i area (cos(phase) X + sin(phase) Y) / 2)."""
    if not (np.isfinite(area) and np.isfinite(phase)):
        raise ValueError("non-finite pulse parameters")
    c = np.cos(area / 2)
    s = np.sin(area / 2)
    return np.array(
        [[c, -1j * np.exp(-1j * phase) * s], [-1j * np.exp(1j * phase) * s, c]],
        dtype=np.complex128,
    )


def _subspace_vectors(levels):
    if isinstance(levels, QubitEncoding):
        levels = levels.levels
    vecs = []
    for lv in levels:
        if isinstance(lv, LevelLabel):
            v = np.zeros(DIM, dtype=np.complex128)
            v[basis_index(lv)] = 1.0
        elif isinstance(lv, IonState):
            v = lv.amplitudes
        else:
            v = np.asarray(lv, dtype=np.complex128)
        vecs.append(v)
    if len(vecs) != 2:
        raise ValueError("a subspace needs exactly two basis vectors")
    V = np.column_stack(vecs)
    if np.max(np.abs(V.conj().T @ V - np.eye(2))) > UNITARY_TOL:
        raise ValueError("subspace basis vectors are not orthonormal")
    return V


def embed(u, levels):
    """Full DIM x DIM unitary acting as ``u`` on ``levels``, identity elsewhere.

    ``levels`` is a pair of labels, a :class:`QubitEncoding`, or a pair of
    orthonormal vectors (for rotations between superposition states).
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("block is not a 2x2 unitary")
    V = _subspace_vectors(levels)
    return np.eye(DIM, dtype=np.complex128) + V @ (u - np.eye(2)) @ V.conj().T


def apply_unitary(state, u, levels=QubitEncoding.S_QUBIT):
    return IonState(embed(u, levels) @ state.amplitudes)


def apply_matrix(state, full):
    """Apply an already-embedded DIM x DIM operator."""
    return IonState(full @ state.amplitudes)
