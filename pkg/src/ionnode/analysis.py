"""Estimators, fits and budgets used to turn raw counts into headline numbers."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import least_squares
from scipy.special import j0

from . import decoherence

IONS = ("up", "down")
PHOTONS = ("H", "V")


# -- probability tables and the fidelity bound ---------------------------

@dataclass(frozen=True)
class ProbTable:
    """Conditional probabilities P(ion | photon) for the two analysis bases.

    ``cond[basis]`` is a 2x2 array indexed ``[ion, photon]`` with ion order
    (up, down) and photon order (H, V); columns sum to one. ``marginals``
    holds (P(H), P(V)) per basis and ``counts`` the number of heralds per
    photon outcome, used for binomial error bars.
    """

    cond: dict
    marginals: dict
    counts: dict

    def __post_init__(self):
        for basis, c in self.cond.items():
            c = np.asarray(c, dtype=float)
            if c.shape != (2, 2) or np.any(np.abs(c.sum(axis=0) - 1) > 1e-12):
                raise ValueError(f"conditional table for {basis} must have unit columns")
            if abs(sum(self.marginals[basis]) - 1) > 1e-12:
                raise ValueError(f"photon marginals for {basis} must sum to one")

    @classmethod
    def from_conditionals(cls, diagonal, offdiagonal, n_per_outcome=500, marginals=(0.5, 0.5)):
        """Build from (P(up|V), P(up|H)) pairs, e.g. values read off a figure."""
        cond, marg, counts = {}, {}, {}
        for basis, (up_v, up_h) in (("diagonal", diagonal), ("offdiagonal", offdiagonal)):
            cond[basis] = np.array([[up_h, up_v], [1 - up_h, 1 - up_v]])
            marg[basis] = tuple(marginals)
            counts[basis] = (n_per_outcome, n_per_outcome)
        return cls(cond, marg, counts)

    @classmethod
    def from_counts(cls, counts_by_basis):
        """``counts_by_basis[basis]`` is a 2x2 integer array ``[ion, photon]``."""
        cond, marg, counts = {}, {}, {}
        for basis, c in counts_by_basis.items():
            c = np.asarray(c, dtype=float)
            col = c.sum(axis=0)
            if np.any(col == 0):
                raise ValueError(f"basis {basis} has a photon outcome with no heralds")
            cond[basis] = c / col
            marg[basis] = tuple(col / col.sum())
            counts[basis] = tuple(int(x) for x in col)
        return cls(cond, marg, counts)

    def conditional(self, basis, ion, photon):
        return float(self.cond[basis][IONS.index(ion), PHOTONS.index(photon)])

    def joint(self, basis, ion, photon):
        return self.conditional(basis, ion, photon) * self.marginals[basis][PHOTONS.index(photon)]


def _bound_from_vector(x):
    # x = [P(up|H), P(up|V), P(H)] diagonal then off-diagonal
    up_h, up_v, p_h = x[0], x[1], x[2]
    p_v = 1 - p_h
    uv, dh = up_v * p_v, (1 - up_h) * p_h
    dv, uh = (1 - up_v) * p_v, up_h * p_h
    diag = uv + dh - 2 * math.sqrt(max(dv * uh, 0.0))
    up_h, up_v, p_h = x[3], x[4], x[5]
    p_v = 1 - p_h
    off = up_v * p_v + (1 - up_h) * p_h - up_h * p_h - (1 - up_v) * p_v
    return 0.5 * (diag + off)


def fidelity_bound(table):
    """Two-basis entanglement fidelity lower bound with first-order 1 sigma.

    Joint probabilities are P(s|p) P(p) with the measured photon marginals.
    """
    for basis in ("diagonal", "offdiagonal"):
        if basis not in table.cond:
            raise ValueError(f"missing {basis} basis")
    x, var = [], []
    for basis in ("diagonal", "offdiagonal"):
        n_h, n_v = table.counts[basis]
        up_h = table.conditional(basis, "up", "H")
        up_v = table.conditional(basis, "up", "V")
        p_h = table.marginals[basis][0]
        x += [up_h, up_v, p_h]
        var += [up_h * (1 - up_h) / n_h, up_v * (1 - up_v) / n_v, p_h * (1 - p_h) / (n_h + n_v)]
    x = np.array(x)
    value = _bound_from_vector(x)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = 1e-7
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (_bound_from_vector(xp) - _bound_from_vector(xm)) / (2 * h)
    sigma = math.sqrt(float(np.sum(grad**2 * np.array(var))))
    return value, sigma


def binomial_error(k, n):
    """1 sigma of the estimate k/n. Degenerate (zero) when k is 0 or n."""
    if n < 1 or k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    p = k / n
    return math.sqrt(p * (1 - p) / n)


def mub_average(entries):
    """Count-weighted mean of six basis-state fidelities and its standard error.

    ``entries`` is a sequence of ``(fidelity, trials)``.
    """
    entries = list(entries)
    if len(entries) != 6:
        raise ValueError(f"need six MUB entries, got {len(entries)}")
    f = np.array([e[0] for e in entries], dtype=float)
    n = np.array([e[1] for e in entries], dtype=float)
    if np.any(n <= 0):
        raise ValueError("every basis needs at least one trial")
    total = n.sum()
    mean = float(np.sum(f * n) / total)
    se = math.sqrt(float(np.sum(n * f * (1 - f)))) / total
    return mean, se


# -- fits -------------------------------------------------------------------

@dataclass
class FitResult:
    params: dict
    errors: dict
    rss: float
    converged: bool
    degenerate: tuple = ()
    message: str = ""
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]


def _failed(names, rss, message):
    return FitResult({n: math.nan for n in names}, {n: math.nan for n in names},
                     rss, False, message=message)


def _covariance(jac, resid, n_params):
    dof = max(len(resid) - n_params, 1)
    s2 = float(resid @ resid) / dof
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj) * s2
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
        return None
    return cov


def _storage_model(p, T):
    # same expression as decoherence.storage_fidelity, without parameter
    # validation so the optimizer may wander through unphysical values
    A, omega, T2, c = p
    arg = 8 * A / omega * np.sin(omega * T / 8) ** 2 * np.sin(omega * T / 4)
    return (1 + j0(arg) * np.exp(-T / T2)) / 2 - c


def fit_storage(T, F, sigma=None, omega_range=(2 * math.pi * 10, 2 * math.pi * 200), n_grid=400):
    """Weighted fit of the echo storage-fidelity model to (T, F) data.

    The noise frequency is seeded by a grid scan over ``omega_range`` and
    refined together with A, T2 and the SPAM offset c. When the data carry
    no oscillation the frequency is unidentifiable: the result then reports
    A = 0, flags ``omega`` as degenerate and still fits T2 and c.
    """
    T = np.asarray(T, dtype=float)
    F = np.asarray(F, dtype=float)
    names = ("A", "omega", "T2", "c")
    if T.size < 8 or T.size != F.size:
        raise ValueError("need at least 8 (T, F) points")
    w = np.ones_like(F) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    # no-oscillation baseline: F = (1 + exp(-T/T2))/2 - c
    def resid0(p):
        return w * ((1 + np.exp(-T / p[0])) / 2 - p[1] - F)

    base = least_squares(resid0, [max(T.max(), 1e-3), max(0.0, 1 - F.max())],
                         bounds=([1e-9, -0.5], [np.inf, 0.5]), xtol=1e-12, ftol=1e-12,
                         gtol=1e-12, max_nfev=2000)
    rss0 = float(base.fun @ base.fun)

    def resid(p):
        return w * (_storage_model(p, T) - F)

    best = None
    T2_0, c_0 = base.x
    for omega in np.linspace(*omega_range, n_grid):
        for A in (0.25, 0.5, 1.0, 2.0):
            p = (A * omega, omega, T2_0, c_0)
            r = resid(p)
            rss = float(r @ r)
            if best is None or rss < best[0]:
                best = (rss, p)
    try:
        sol = least_squares(resid, best[1], method="lm", xtol=1e-12, ftol=1e-12,
                            gtol=1e-12, max_nfev=200 * 5)
    except ValueError as exc:
        return _failed(names, math.nan, f"storage fit failed: {exc}")
    rss = float(sol.fun @ sol.fun)
    p = sol.x.copy()
    p[0] = abs(p[0])
    cov = _covariance(sol.jac, sol.fun, 4)
    # oscillation absent: the full model cannot beat the baseline meaningfully
    no_signal = p[0] / p[1] < 1e-6 or rss0 - rss <= 1e-9 * max(rss0, 1e-300) + 1e-24
    if no_signal or cov is None or not np.isfinite(cov[1, 1]):
        cov0 = _covariance(base.jac, base.fun, 2)
        err = np.sqrt(np.diag(cov0)) if cov0 is not None else [math.nan, math.nan]
        return FitResult(
            {"A": 0.0, "omega": math.nan, "T2": float(base.x[0]), "c": float(base.x[1])},
            {"A": math.nan, "omega": math.nan, "T2": float(err[0]), "c": float(err[1])},
            rss0, bool(base.success), degenerate=("omega",),
            message="no oscillation resolved; noise frequency unidentifiable",
        )
    if p[2] <= 0 or not sol.success:
        return _failed(names, rss, f"storage fit did not converge: {sol.message}")
    err = np.sqrt(np.diag(cov))
    span_ok = (T.max() - T.min()) >= 8 * math.pi / p[1]
    return FitResult(
        dict(zip(names, map(float, p))), dict(zip(names, map(float, err))), rss, True,
        message="" if span_ok else "data span shorter than one noise period",
        extra={"frequency": p[1] / (2 * math.pi), "frequency_err": err[1] / (2 * math.pi)},
    )


def fit_conversion(N, F):
    """Fit F = F0 (1 - eps)^N by linear least squares on ln F."""
    N = np.asarray(N, dtype=float)
    F = np.asarray(F, dtype=float)
    if np.any(F <= 0):
        raise ValueError("fidelities must be positive for a log-linear fit")
    if np.unique(N).size < 3:
        raise ValueError("need at least three distinct N")
    X = np.column_stack([np.ones_like(N), N])
    y = np.log(F)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = X @ coef - y
    cov = _covariance(X, resid, 2)
    ln_f0, ln_keep = coef
    F0, eps = math.exp(ln_f0), 1 - math.exp(ln_keep)
    e_ln = np.sqrt(np.diag(cov)) if cov is not None else (math.nan, math.nan)
    return FitResult(
        {"F0": F0, "eps": eps},
        {"F0": F0 * float(e_ln[0]), "eps": math.exp(ln_keep) * float(e_ln[1])},
        float(resid @ resid), True,
    )


def fit_phase_scan(phi, P):
    """Least-squares sinusoid P = mean + amplitude cos(phi - phase).

    ``phase`` is the optimum (maximum) of the curve. Constant data give
    amplitude 0 with the phase flagged undefined.
    """
    phi = np.asarray(phi, dtype=float)
    P = np.asarray(P, dtype=float)
    n = phi.size
    if n < 5 or P.size != n:
        raise ValueError("need at least 5 (phi, P) points")
    if np.ptp(phi) < 2 * math.pi * (n - 1) / n - 1e-9:
        raise ValueError("phase points must cover a full period")
    X = np.column_stack([np.ones(n), np.cos(phi), np.sin(phi)])
    coef, *_ = np.linalg.lstsq(X, P, rcond=None)
    resid = X @ coef - P
    m, a_c, a_s = coef
    amp = math.hypot(a_c, a_s)
    cov = _covariance(X, resid, 3)
    scale = 1e-12 * max(1.0, abs(m))
    if amp <= scale:
        return FitResult({"mean": float(m), "amplitude": 0.0, "phase": math.nan},
                         {"mean": math.nan, "amplitude": math.nan, "phase": math.nan},
                         float(resid @ resid), True, degenerate=("phase",),
                         message="no modulation; optimum phase undefined",
                         extra={"max": float(m), "min": float(m)})
    phase = math.atan2(a_s, a_c)
    if cov is not None:
        # propagate (a_c, a_s) -> (amplitude, phase)
        J = np.array([[a_c / amp, a_s / amp], [-a_s / amp**2, a_c / amp**2]])
        c2 = J @ cov[1:, 1:] @ J.T
        errs = {"mean": math.sqrt(cov[0, 0]), "amplitude": math.sqrt(max(c2[0, 0], 0)),
                "phase": math.sqrt(max(c2[1, 1], 0))}
    else:
        errs = {"mean": math.nan, "amplitude": math.nan, "phase": math.nan}
    return FitResult({"mean": float(m), "amplitude": amp, "phase": phase}, errs,
                     float(resid @ resid), True,
                     extra={"max": float(m + amp), "min": float(m - amp)})


# -- budgets ----------------------------------------------------------------

def rate_budget(rep_rate, solid_fraction, proj_weight, fiber, detector, optics):
    """Heralded entanglement rate: repetition rate times every efficiency."""
    if rep_rate <= 0:
        raise ValueError("repetition rate must be positive")
    factors = (solid_fraction, proj_weight, fiber, detector, optics)
    for f in factors:
        if not 0 <= f <= 1:
            raise ValueError(f"efficiency {f} outside [0, 1]")
    return rep_rate * math.prod(factors)


@dataclass(frozen=True)
class BudgetTerm:
    name: str
    infidelity: float
    formula: str


def error_budget(cfg):
    """Itemized infidelities of the two-basis entanglement bound.

    Uses bound-level accounting: a state-level error eps enters the bound
    twice where both conditional errors are affected.
    """
    attempts = cfg.rep_rate / cfg.entanglement_rate if cfg.entanglement_rate > 0 else 0.0
    dark = attempts * cfg.detect_window * cfg.dark_count_rate
    spam = cfg.err_bright + cfg.err_dark
    pol = 2 * cfg.pol_impurity_eps
    mis = 2 * cfg.misalign_angle**2
    dphi = 2 * math.pi * cfg.delta_f_zeeman * cfg.jitter_sigma
    jitter = dphi**2
    zeeman = 1 - decoherence.zeeman_coherence(cfg.mw2_duration, cfg.t2_zeeman)
    terms = [
        BudgetTerm("dark_count", dark, "(rep_rate/rate) * window * dark_rate"),
        BudgetTerm("spam", spam, "err_bright + err_dark"),
        BudgetTerm("polarization", pol, "2 * eps"),
        BudgetTerm("misalignment", mis, "2 * theta^2"),
        BudgetTerm("jitter", jitter, "(2 pi delta_f dt)^2"),
        BudgetTerm("zeeman_t2", zeeman, "1 - exp(-t_mw2 / T2)"),
    ]
    return [BudgetTerm(t.name, min(max(t.infidelity, 0.0), 1.0), t.formula) for t in terms]
