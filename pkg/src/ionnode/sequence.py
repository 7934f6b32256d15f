"""Stochastic experiment engine: entanglement attempts, memory storage, combined node.

Every random decision of an attempt comes from a counter-based stream laid
out as ``ATTEMPT_STRIDE`` uniforms per attempt:

    slot 0  optical-pumping success      slot 4  emission time
    slot 1  level left by a failed pump  slot 5  dark count in window
    slot 2  370 nm excitation            slot 6  dark-count arrival time
    slot 3  photon collected + detected  slot 7  unused

The heralding kernels scan these slots in bulk to find the first heralded
attempt; :func:`run_attempt` replays that attempt in full. Randomness used
only after a herald (decay channel, jitter, PBS port, ion detection) comes
from a separate stream keyed on the attempt.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import kernels
from .analysis import ProbTable, fit_phase_scan, mub_average
from .atom import (
    DIM, DOWN, F_ONE, F_ZERO, P00, P_MINUS, P_PLUS, S_MINUS, S_PLUS, UP,
    IonState, QubitEncoding, apply_matrix, apply_unitary, basis_index, embed, rotation,
)
from .crosstalk import far_detuned_suppression, per_photon_error
from .decoherence import dephasing_flip_probability, echo_coherence, segment_phases
from .photonics import (
    MODES_HV, JointState, apply_jones, collect_perpendicular, emit_entangled,
    emit_leaked, half_wave_plate, measure_pbs, polarization_rotation,
    quarter_wave_plate, zeeman_evolve, zeeman_phases,
)
from .rng import Stream, derive_key

STRIDE = kernels.ATTEMPT_STRIDE
COLLECTED_WEIGHT = 2.0 / 3.0
MAX_ATTEMPTS = 10**9

# stream tags
ENTANGLE_TAG = 0x454E54
STORAGE_TAG = 0x53544F
COMBINED_TAG = 0x434F4D
HERALD_TAG = 0x484552

BASES = ("diagonal", "offdiagonal")
OFFDIAG_HWP = math.pi / 8

_S_F1 = (S_MINUS, UP, S_PLUS)
_SYM = IonState.superposition({S_MINUS: 1.0, S_PLUS: 1.0})


# -- records and tables -----------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    attempts: int
    heralded: bool
    t_emit: float = math.nan
    t_detect: float = math.nan
    dark_count: bool = False
    photon_outcome: str = "none"
    ion_outcome: str = "none"
    memory_outcome: str = "none"
    basis: str = "diagonal"
    phase: float = 0.0
    real_photon: bool = False
    leaked: bool = False
    pump_failed: bool = False
    true_fidelity: float = math.nan

    def __post_init__(self):
        if not self.heralded and self.photon_outcome != "none":
            raise ValueError("unheralded record carries a photon outcome")
        if self.dark_count and not self.heralded:
            raise ValueError("a dark count always heralds")


ION_OUTCOMES = {"bright": 0, "dark": 1}  # bright = up, dark = down
PHOTON_OUTCOMES = {"H": 0, "V": 1}


@dataclass
class CorrelationTable:
    """Counts indexed ``[ion, photon]``: ion (up, down) by photon (H, V)."""

    basis: str
    phase: float = 0.0
    counts: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), dtype=np.int64))

    def add(self, record):
        if not record.heralded:
            return
        self.counts[ION_OUTCOMES[record.ion_outcome], PHOTON_OUTCOMES[record.photon_outcome]] += 1

    @classmethod
    def from_records(cls, basis, records, phase=0.0):
        t = cls(basis, phase)
        for r in records:
            t.add(r)
        return t

    @property
    def total(self):
        return int(self.counts.sum())

    def conditional(self, ion, photon):
        """P(ion | photon); nan when that photon outcome never occurred."""
        col = self.counts[:, PHOTON_OUTCOMES[photon]]
        n = col.sum()
        return math.nan if n == 0 else float(col[0 if ion == "up" else 1] / n)


# -- elementary operations ---------------------------------------------------

def optical_pump(cfg, rng):
    """Pump to |0,0>. Consumes two draws: success, and the failure level."""
    u_ok, u_level = rng.random(), rng.random()
    if u_ok >= cfg.pump_failure:
        return IonState.basis(DOWN)
    return IonState.basis(_S_F1[min(int(u_level * 3), 2)])


def microwave_pulse(state, encoding, area, phase):
    return apply_unitary(state, rotation(area, phase), encoding)


def excitation_probability(area):
    """Probability that the 370 nm pulse excites a ground-state |1,0> ion."""
    if not math.isfinite(area):
        raise ValueError("non-finite pulse area")
    if not 0 <= area <= 2 * math.pi:
        area = area % (2 * math.pi)
    return math.sin(area / 2) ** 2


@dataclass(frozen=True)
class Excitation:
    state: IonState
    excited: bool
    leaked: bool


def ultrafast_pi(state, area, eps, rng):
    """Instantaneous excitation of the |1,0> population (one draw).

    The main branch (probability (1-eps) sin^2(area/2) per unit |1,0>
    population) lands in |P,0,0>; the leaked branch (eps sin^2) in the
    symmetric |P,1,+-1> superposition. Otherwise the ion is left in the
    no-excitation branch.
    """
    p_up = state.population(UP)
    pe = excitation_probability(area)
    u = rng.random()
    if u < eps * pe * p_up:
        return Excitation(IonState.superposition({P_MINUS: 1.0, P_PLUS: 1.0}), True, True)
    if u < pe * p_up:
        a = state.amplitude(UP)
        return Excitation(IonState.superposition({P00: a / abs(a)}), True, False)
    if pe * p_up == 0:
        return Excitation(state, False, False)
    amps = state.amplitudes.copy()
    amps[basis_index(UP)] *= math.sqrt(1 - pe)
    return Excitation(IonState(amps).normalized(), False, False)


def detect_ion(state, err_bright, err_dark, rng):
    """Fluorescence readout: project onto bright (S F=1) or dark, then misread."""
    p_bright = state.population(*_S_F1) / state.norm()
    bright = rng.random() < p_bright
    u = rng.random()
    if bright:
        return "bright" if u >= err_bright else "dark"
    return "bright" if u < err_dark else "dark"


# -- one attempt ----------------------------------------------------------------

@dataclass(frozen=True)
class AttemptThresholds:
    p_pump_fail: float
    p_excite: float
    p_collect: float
    p_window: float
    p_dark: float

    @property
    def kernel(self):
        return (self.p_pump_fail, self.p_excite, self.p_collect, self.p_window, self.p_dark)


def attempt_thresholds(cfg):
    return AttemptThresholds(
        p_pump_fail=cfg.pump_failure,
        p_excite=excitation_probability(cfg.pulse_area),
        p_collect=cfg.detection_efficiency * COLLECTED_WEIGHT,
        p_window=-math.expm1(-cfg.detect_window / cfg.decay_time),
        p_dark=min(cfg.dark_count_rate * cfg.detect_window, 1.0),
    )


def herald_probability(cfg):
    """Closed-form probability that one attempt heralds."""
    th = attempt_thresholds(cfg)
    real = (1 - th.p_pump_fail) * th.p_excite * th.p_collect * th.p_window
    return real + th.p_dark - real * th.p_dark


def ideal_joint_state():
    """(-i|0,0>|H> + |1,0>|V>)/sqrt(2), the target after the MW2 feedforward."""
    amps = np.zeros((DIM, 2), dtype=np.complex128)
    amps[basis_index(DOWN), 0] = -1j / math.sqrt(2)
    amps[basis_index(UP), 1] = 1 / math.sqrt(2)
    return JointState(amps, MODES_HV)


_PHI = ideal_joint_state().amps


def mw2_unitary(t_detect, delta_f):
    """Two-tone pi pulse between |0,0> and the Zeeman superposition expected at t_detect."""
    pm, pp = zeeman_phases(t_detect, delta_f)
    amps = _SYM.amplitudes.copy()
    amps[basis_index(S_MINUS)] *= pm
    amps[basis_index(S_PLUS)] *= pp
    b = IonState(amps)
    return embed(rotation(math.pi, 0.0), (IonState.basis(DOWN), b))


def _z_flip():
    return embed(np.diag([1.0, -1.0]).astype(complex), QubitEncoding.ZEEMAN_PAIR)


Z_FLIP = _z_flip()


def analysis_jones(cfg, basis):
    hwp = OFFDIAG_HWP if basis == "offdiagonal" else 0.0
    return (quarter_wave_plate(0.0) @ half_wave_plate(hwp)
            @ polarization_rotation(cfg.misalign_angle))


def run_attempt(cfg, rng, basis="diagonal", phase=0.0):
    """One pump / MW1 / excite / emit / herald / analyse cycle.

    ``rng`` is a :class:`Stream`; the attempt consumes exactly
    ``ATTEMPT_STRIDE`` draws from it.
    """
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    start = rng.counter
    th = attempt_thresholds(cfg)
    ion = optical_pump(cfg, rng)
    pump_failed = ion.population(DOWN) < 1.0
    ion = microwave_pulse(ion, QubitEncoding.S_QUBIT, math.pi, 0.0)
    exc = ultrafast_pi(ion, cfg.pulse_area, cfg.pol_impurity_eps, rng)
    collected = rng.random() < th.p_collect
    u_t = rng.random()
    t_emit = -cfg.decay_time * math.log1p(-u_t)
    in_window = u_t < th.p_window
    dark = rng.random() < th.p_dark
    t_dark = rng.random() * cfg.detect_window
    rng.counter = start + STRIDE

    real = exc.excited and collected and in_window
    if not (real or dark):
        return TrialRecord(attempts=1, heralded=False, basis=basis, phase=phase,
                           leaked=exc.leaked, pump_failed=pump_failed)

    h = Stream(derive_key(rng.key, start, HERALD_TAG))
    joint = None
    if exc.excited:
        if exc.leaked:
            # collection-conditioned branching (pi : sigma-down : sigma-up) = 2:1:1,
            # unconditioned it is 1:1:1
            u = h.random()
            if real:
                channel = "pi" if u < 0.5 else ("sigma-down" if u < 0.75 else "sigma-up")
            else:
                channel = ("pi", "sigma-down", "sigma-up")[min(int(u * 3), 2)]
            emitted = emit_leaked(channel)
        else:
            emitted = emit_entangled(exc.state)
            h.random()
        if real:
            joint, w = collect_perpendicular(emitted)
            joint = zeeman_evolve(joint, t_emit, cfg.delta_f_zeeman)
        else:
            # photon lost: keep the ion branch of one randomly emitted mode
            col = np.nonzero(np.abs(emitted.amps).sum(axis=0) > 0)[0]
            m = col[min(int(h.random() * len(col)), len(col) - 1)]
            ion = IonState(emitted.amps[:, m]).normalized()
            ion = zeeman_evolve(ion, t_emit, cfg.delta_f_zeeman)
    else:
        h.random()
        ion = exc.state
    if joint is None:
        h.random()

    t_click = t_emit if real else t_dark
    t_detect = t_click + h.normal(0.0, cfg.jitter_sigma)
    flip = h.random() < dephasing_flip_probability(cfg.mw2_duration, cfg.t2_zeeman)
    mw2 = mw2_unitary(t_detect, cfg.delta_f_zeeman)
    if flip:
        mw2 = mw2 @ Z_FLIP

    if joint is not None:
        joint = joint.map_ion(mw2)
        true_f = abs(np.vdot(_PHI, joint.amps)) ** 2
        joint = apply_jones(joint, analysis_jones(cfg, basis))
        photon, ion = measure_pbs(joint, h)
    else:
        ion = apply_matrix(ion, mw2)
        true_f = 0.25 * (ion.population(DOWN) + ion.population(UP))
        photon = "H" if h.random() < 0.5 else "V"
        h.random()
    if basis == "offdiagonal":
        ion = microwave_pulse(ion, QubitEncoding.S_QUBIT, math.pi / 2, phase)
    outcome = detect_ion(ion, cfg.err_bright, cfg.err_dark, h)
    return TrialRecord(
        attempts=1, heralded=True, t_emit=t_emit if exc.excited else math.nan,
        t_detect=t_detect, dark_count=dark, photon_outcome=photon, ion_outcome=outcome,
        basis=basis, phase=phase, real_photon=real, leaked=exc.leaked,
        pump_failed=pump_failed, true_fidelity=float(true_f),
    )


def run_heralded(cfg, key, basis="diagonal", phase=0.0, max_attempts=MAX_ATTEMPTS, th=None):
    """Attempt until the first herald on stream ``key``; ``attempts`` counts all tries."""
    th = th or attempt_thresholds(cfg)
    idx = kernels.first_herald(key, 0, max_attempts, th.kernel)
    if idx < 0:
        raise RuntimeError(f"no herald within {max_attempts} attempts")
    rec = run_attempt(cfg, Stream(key, idx * STRIDE), basis, phase)
    if not rec.heralded:
        raise RuntimeError("heralding kernel and attempt replay disagree")
    return replace(rec, attempts=idx + 1)


# -- parallel plumbing ----------------------------------------------------------

def _chunks(items, n):
    n = max(1, min(n, len(items)))
    size = -(-len(items) // n)
    return [items[i:i + size] for i in range(0, len(items), size)]


def _parallel(fn, arg_chunks, workers):
    """Apply ``fn(*args)`` to each chunk, in order, optionally in processes."""
    if workers <= 1 or len(arg_chunks) <= 1:
        return [fn(*a) for a in arg_chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *a) for a in arg_chunks]
        return [f.result() for f in futures]


def _herald_batch(cfg, basis, phase, keys):
    th = attempt_thresholds(cfg)
    return [run_heralded(cfg, k, basis, phase, th=th) for k in keys]


def _collect_heralds(cfg, basis, phase, keys, workers):
    chunks = [(cfg, basis, phase, c) for c in _chunks(keys, workers * 4)]
    out = []
    for part in _parallel(_herald_batch, chunks, workers):
        out.extend(part)
    return out


# -- entanglement experiment -----------------------------------------------------

@dataclass
class PhaseScan:
    phi: np.ndarray
    p_up_v: np.ndarray
    p_up_h: np.ndarray
    fit: object

    @property
    def optimum(self):
        return self.fit["phase"]


@dataclass
class EntanglementResult:
    tables: dict
    records: dict
    phase: float
    scan: PhaseScan | None = None

    def prob_table(self):
        return ProbTable.from_counts({b: t.counts for b, t in self.tables.items()})

    @property
    def attempts(self):
        return sum(r.attempts for rs in self.records.values() for r in rs)

    @property
    def heralds(self):
        return sum(len(rs) for rs in self.records.values())

    def true_fidelity(self):
        """Trajectory-averaged fidelity with the target state over all heralds."""
        f = [r.true_fidelity for rs in self.records.values() for r in rs]
        return float(np.mean(f)), float(np.std(f) / math.sqrt(len(f)))


def phase_scan(cfg, n_per_point, *, seed=0, workers=1, points=12):
    """Scan the MW3 phase in the off-diagonal basis and fit the correlation fringe."""
    phi = 2 * math.pi * np.arange(points) / points
    up_v, up_h = [], []
    for j, p in enumerate(phi):
        keys = [derive_key(seed, ENTANGLE_TAG, 2, j + 1, k) for k in range(n_per_point)]
        t = CorrelationTable.from_records("offdiagonal", _collect_heralds(cfg, "offdiagonal", float(p), keys, workers), float(p))
        up_v.append(t.conditional("up", "V"))
        up_h.append(t.conditional("up", "H"))
    up_v, up_h = np.array(up_v), np.array(up_h)
    fit = fit_phase_scan(phi, np.nan_to_num(up_v - up_h, nan=0.0))
    return PhaseScan(phi, up_v, up_h, fit)


def run_entanglement_experiment(cfg, n_heralds, schedule=BASES, *, seed=0, workers=1,
                                phase=None, scan_points=12, scan_heralds=None):
    """Collect ``n_heralds`` heralded events per scheduled basis.

    For the off-diagonal basis the MW3 phase is ``phase`` when given,
    otherwise the optimum of a ``scan_points`` phase scan.
    """
    if n_heralds < 1:
        raise ValueError("need at least one herald")
    for b in schedule:
        if b not in BASES:
            raise ValueError(f"unknown basis {b!r}")
    tables, records, scan = {}, {}, None
    if "offdiagonal" in schedule and phase is None:
        n_scan = scan_heralds or max(100, n_heralds // 10)
        scan = phase_scan(cfg, n_scan, seed=seed, workers=workers, points=scan_points)
        phase = scan.optimum if math.isfinite(scan.optimum) else 0.0
    phase = 0.0 if phase is None else float(phase)
    for b in schedule:
        tag = 1 if b == "diagonal" else 2
        keys = [derive_key(seed, ENTANGLE_TAG, tag, 0, k) for k in range(n_heralds)]
        p = phase if b == "offdiagonal" else 0.0
        recs = _collect_heralds(cfg, b, p, keys, workers)
        records[b] = recs
        tables[b] = CorrelationTable.from_records(b, recs, p)
    return EntanglementResult(tables, records, phase, scan)


# -- memory storage ----------------------------------------------------------------

MUB_LABELS = ("0", "1", "+", "-", "L", "R")
_MUB_PREP = (
    np.eye(2, dtype=np.complex128),
    rotation(math.pi, 0.0),
    rotation(math.pi / 2, math.pi / 2),
    rotation(math.pi / 2, -math.pi / 2),
    rotation(math.pi / 2, math.pi),
    rotation(math.pi / 2, 0.0),
)
_S = QubitEncoding.S_QUBIT
PREP = tuple(embed(u, _S) for u in _MUB_PREP)
# maps each prepared state, after the two echo pulses, to bright |1>
ANALYSIS = tuple(embed(rotation(math.pi, 0.0) @ u.conj().T, _S) for u in _MUB_PREP)
ECHO_PI = embed(rotation(math.pi, 0.0), _S)


def _conversion_swap():
    m = np.eye(DIM, dtype=np.complex128)
    for a, b in ((DOWN, F_ZERO), (UP, F_ONE)):
        i, j = basis_index(a), basis_index(b)
        m[[i, j]] = m[[j, i]]
    return m


CONVERT = _conversion_swap()
MEMORY_DRAWS = 16


def _depolarize(u_event, u_state, p, encoding):
    """Replace the qubit by a random basis state with probability p (or None)."""
    if u_event >= p:
        return None
    return IonState.basis(encoding.levels[0 if u_state < 0.5 else 1])


def memory_trial(cfg, T, mub, rng, crosstalk=0.0):
    """One storage trial of MUB state ``mub``; returns (passed, true fidelity).

    The trial consumes exactly ``MEMORY_DRAWS`` uniforms so storage-only and
    combined runs with the same stream see identical noise.
    """
    if T <= 0:
        raise ValueError("storage time must be positive")
    u = rng.take(MEMORY_DRAWS - 2)
    tau = T / 4
    seg_t = (tau, 2 * tau, tau)
    phases = segment_phases(cfg.echo, tau, 2 * math.pi * u[0])
    p_rt = min(2 * cfg.conv_roundtrip_eps, 1.0)
    state = apply_matrix(IonState.basis(DOWN), PREP[mub])
    for i in range(3):
        state = apply_matrix(state, CONVERT)
        z = np.diag([np.exp(-0.5j * phases[i]), np.exp(0.5j * phases[i])])
        if u[1 + i] < dephasing_flip_probability(seg_t[i], cfg.echo.T2):
            z = z @ np.diag([1.0, -1.0])
        state = apply_unitary(state, z, QubitEncoding.F_QUBIT)
        if i == 1:
            state = _depolarize(u[4], u[5], crosstalk, QubitEncoding.F_QUBIT) or state
        state = apply_matrix(state, CONVERT)
        state = _depolarize(u[6 + 2 * i], u[7 + 2 * i], p_rt, _S) or state
        if i < 2:
            state = apply_matrix(state, ECHO_PI)
    state = apply_matrix(state, ANALYSIS[mub])
    true_f = state.population(UP)
    outcome = detect_ion(state, cfg.memory_err_bright, cfg.memory_err_dark, rng)
    return outcome == "bright", true_f


@dataclass
class StorageResult:
    T: float
    passes: np.ndarray
    trials: np.ndarray
    true_fidelity: np.ndarray  # summed per basis

    @property
    def fidelities(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.passes / self.trials

    def average(self):
        return mub_average(zip(self.fidelities, self.trials))

    def mean_true_fidelity(self):
        return float(self.true_fidelity.sum() / self.trials.sum())


def _storage_batch(cfg, T, indices, schedule, seed, crosstalk):
    out = []
    for i in indices:
        mub = schedule[i % len(schedule)]
        ok, f = memory_trial(cfg, T, mub, Stream(derive_key(seed, STORAGE_TAG, i)),
                             crosstalk[i] if crosstalk is not None else 0.0)
        out.append((mub, ok, f))
    return out


def _tally(T, results):
    passes, trials, true_f = np.zeros(6), np.zeros(6), np.zeros(6)
    for mub, ok, f in results:
        passes[mub] += ok
        trials[mub] += 1
        true_f[mub] += f
    return StorageResult(T, passes, trials, true_f)


def run_storage_experiment(cfg, T, n_trials, mub_schedule=range(6), *, seed=0, workers=1):
    """Store MUB states for time T = 4 tau; trial i uses basis schedule[i % len]."""
    schedule = tuple(mub_schedule)
    if not schedule or any(not 0 <= m < 6 for m in schedule):
        raise ValueError("MUB schedule entries must be in 0..5")
    chunks = [(cfg, T, c, schedule, seed, None) for c in _chunks(list(range(n_trials)), workers * 4)]
    results = [r for part in _parallel(_storage_batch, chunks, workers) for r in part]
    return _tally(T, results)


def expected_storage_fidelity(cfg, T, crosstalk=0.0):
    """Closed-form MUB-average measured fidelity of the storage model."""
    s = (1 - min(2 * cfg.conv_roundtrip_eps, 1.0)) ** 3 * (1 - crosstalk)
    C = echo_coherence(cfg.echo, T / 4) * math.exp(-T / cfg.echo.T2)
    F = s * (1 / 3 + 2 / 3 * (1 + C) / 2) + (1 - s) / 2
    return F * (1 - cfg.memory_err_bright) + (1 - F) * cfg.memory_err_dark


# -- combined node ----------------------------------------------------------------

def photons_per_attempt(cfg):
    """Photons scattered by the communication ion in one attempt."""
    k = cfg.pump_photon_count or 0
    return cfg.doppler_photons + k + excitation_probability(cfg.pulse_area)


def crosstalk_probability(cfg, n_photons, protected=True):
    """Memory depolarization probability after ``n_photons`` scattered photons."""
    p1 = per_photon_error(cfg.wavelength, cfg.ion_distance)
    if protected:
        p1 *= far_detuned_suppression(cfg.f_linewidth, cfg.f_detuning)
    return -math.expm1(n_photons * math.log1p(-p1))


@dataclass
class CombinedResult:
    tables: dict
    records: list
    memory: StorageResult
    n_trials: int
    window: float
    mean_attempts: float
    mean_crosstalk: float

    @property
    def success_fraction(self):
        return sum(r.heralded for r in self.records) / self.n_trials

    def prob_table(self):
        return ProbTable.from_counts({b: t.counts for b, t in self.tables.items()})


def _combined_batch(cfg, T, window, indices, phase, protected, seed):
    th = attempt_thresholds(cfg)
    n_window = int(round(cfg.rep_rate * window))
    per_attempt = photons_per_attempt(cfg)
    out = []
    for i in indices:
        basis = BASES[i % 2]
        key = derive_key(seed, COMBINED_TAG, i)
        idx = kernels.first_herald(key, 0, n_window, th.kernel) if n_window > 0 else -1
        p = phase if basis == "offdiagonal" else 0.0
        if idx >= 0:
            rec = replace(run_attempt(cfg, Stream(key, idx * STRIDE), basis, p), attempts=idx + 1)
        else:
            rec = TrialRecord(attempts=n_window, heralded=False, basis=basis, phase=p)
        x = crosstalk_probability(cfg, rec.attempts * per_attempt, protected) if rec.attempts else 0.0
        mub = i % 6
        ok, f = memory_trial(cfg, T, mub, Stream(derive_key(seed, STORAGE_TAG, i)), x)
        out.append((replace(rec, memory_outcome="pass" if ok else "fail"), mub, ok, f, x))
    return out


def run_combined_experiment(cfg, T, n_trials, *, window=None, phase=0.0, protected=True,
                            seed=0, workers=1):
    """Memory storage for T with entanglement attempts in the middle ``window``.

    Attempts stop at the first herald. Trial i alternates the photon basis
    and cycles the six MUB states; its memory stream is the one trial i of
    :func:`run_storage_experiment` uses with the same seed.
    """
    window = T / 2 if window is None else window
    if not 0 <= window <= T / 2:
        raise ValueError("entanglement window must fit in the middle storage segment")
    chunks = [(cfg, T, window, c, phase, protected, seed)
              for c in _chunks(list(range(n_trials)), workers * 4)]
    rows = [r for part in _parallel(_combined_batch, chunks, workers) for r in part]
    records = [r[0] for r in rows]
    tables = {b: CorrelationTable.from_records(b, [r for r in records if r.basis == b],
                                               phase if b == "offdiagonal" else 0.0)
              for b in BASES}
    memory = _tally(T, [(m, ok, f) for _, m, ok, f, _ in rows])
    return CombinedResult(
        tables, records, memory, n_trials, window,
        mean_attempts=float(np.mean([r.attempts for r in records])),
        mean_crosstalk=float(np.mean([r[4] for r in rows])),
    )
