"""Command-line front end: ``ionnode <subcommand> [options] [--key=value ...]``.

Configuration precedence, lowest first: built-in defaults, ``--config``
file, ``IONNODE_<KEY>`` environment variables, ``--key=value`` arguments,
then ``--detector`` and finally ``--noise off``.

Exit codes: 0 success, 1 runtime or convergence failure, 2 input error.
"""

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import __version__, analysis, crosstalk, kernels, sequence
from .config import (
    DETECTORS, NoiseConfig, apply_overrides, env_overrides, format_config,
    noiseless, read_config_file,
)


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


# -- output helpers -----------------------------------------------------------

class Output:
    def __init__(self, directory, header):
        self.dir = directory
        self.header = header
        os.makedirs(directory, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def csv(self, name, columns, rows):
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            for line in self.header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def summary(self, items):
        lines = [f"# {h}" for h in self.header]
        lines += [f"{k} = {_fmt(v)}" for k, v in items]
        text = "\n".join(lines) + "\n"
        with open(self.path("summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


# -- argument handling -----------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=_u64, default=0, help="64-bit master seed (default 0)")
    common.add_argument("--workers", type=_positive, default=1, help="worker processes (default 1)")
    common.add_argument("--trials", type=_positive, help="trials or heralds (command specific)")
    common.add_argument("--out", default="ionnode-out", help="output directory")
    common.add_argument("--noise", choices=("on", "off"), default="on")
    common.add_argument("--detector", choices=tuple(DETECTORS))
    common.add_argument("--protection", choices=("on", "off"), default="on")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective configuration with sources and exit")

    p = argparse.ArgumentParser(prog="ionnode", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ionnode {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entangle", parents=[common], help="ion-photon entanglement run")
    e.add_argument("--scan-points", type=_positive, default=12)
    e.add_argument("--scan-heralds", type=_positive, help="heralds per phase-scan point")
    e.add_argument("--phase", type=float, help="fixed MW3 phase (skip the scan)")

    s = sub.add_parser("storage", parents=[common], help="memory storage run")
    s.add_argument("--time", type=float, default=0.2, help="storage time T for the MUB run (s)")
    s.add_argument("--sweep-points", type=int, default=40, help="|+> sweep points (0 to skip)")
    s.add_argument("--sweep-trials", type=_positive, default=500)
    s.add_argument("--sweep-min", type=float, default=0.01)
    s.add_argument("--sweep-max", type=float, default=1.0)

    c = sub.add_parser("combined", parents=[common], help="memory storage during entanglement attempts")
    c.add_argument("--time", type=float, default=0.2)
    c.add_argument("--window", type=float, help="attempt window, centred (default T/2)")
    c.add_argument("--scan-heralds", type=_positive, default=300)
    c.add_argument("--phase", type=float)

    sub.add_parser("crosstalk", parents=[common], help="crosstalk scaling tables")
    sub.add_parser("budget", parents=[common], help="rate and error budgets")

    f = sub.add_parser("fit", parents=[common], help="fit a model to a CSV file")
    f.add_argument("model", choices=("storage", "conversion", "phase"))
    f.add_argument("input", help="CSV with x, y[, sigma] columns")
    return p


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _split_overrides(extra):
    out = {}
    for tok in extra:
        if not tok.startswith("--") or "=" not in tok:
            raise InputError(f"unrecognized argument {tok!r}")
        key, value = tok[2:].split("=", 1)
        out[key.replace("-", "_")] = value
    return out


def resolve_config(args, overrides, environ=None):
    cfg = NoiseConfig()
    try:
        if args.config:
            cfg = apply_overrides(cfg, read_config_file(args.config))
        cfg = apply_overrides(cfg, env_overrides(environ))
        cfg = apply_overrides(cfg, overrides)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc.args[0]) if exc.args else str(exc)) from None
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    if args.detector:
        cfg = cfg.with_detector(args.detector)
    if args.noise == "off":
        cfg = noiseless(cfg)
    return cfg


def _header(args):
    return [f"ionnode {__version__} {args.command}", f"seed={args.seed}, workers={args.workers}",
            f"backend={kernels.BACKEND}, noise={args.noise}, protection={args.protection}"]


# -- subcommands -------------------------------------------------------------------

def _table_rows(tables):
    for basis, t in tables.items():
        for ion in ("up", "down"):
            for photon in ("H", "V"):
                n = int(t.counts[0 if ion == "up" else 1, 0 if photon == "H" else 1])
                yield basis, t.phase, ion, photon, n, t.conditional(ion, photon)


def _bound_items(tables):
    try:
        b, s = analysis.fidelity_bound(
            analysis.ProbTable.from_counts({k: t.counts for k, t in tables.items()}))
    except ValueError:
        return math.nan, math.nan
    return b, s


def cmd_entangle(args, cfg, out):
    n = args.trials or 10_000
    res = sequence.run_entanglement_experiment(
        cfg, n, seed=args.seed, workers=args.workers, phase=args.phase,
        scan_points=args.scan_points, scan_heralds=args.scan_heralds)
    out.csv("correlations.csv", ["basis", "phase", "ion", "photon", "count", "conditional"],
            _table_rows(res.tables))
    rows = []
    for basis, recs in res.records.items():
        for r in recs:
            rows.append((basis, r.attempts, r.t_emit, r.t_detect, int(r.real_photon),
                         int(r.dark_count), int(r.leaked), r.photon_outcome, r.ion_outcome,
                         r.true_fidelity))
    out.csv("trials.csv", ["basis", "attempts", "t_emit", "t_detect", "real_photon",
                           "dark_count", "leaked", "photon", "ion", "true_fidelity"], rows)
    if res.scan is not None:
        sc = res.scan
        out.csv("phase_scan.csv", ["phi", "p_up_given_V", "p_up_given_H"],
                zip(sc.phi, sc.p_up_v, sc.p_up_h))
        out.csv("plot_phase_scan_V.csv", ["phi", "p_up_given_V"], zip(sc.phi, sc.p_up_v))
        out.csv("plot_phase_scan_H.csv", ["phi", "p_up_given_H"], zip(sc.phi, sc.p_up_h))
    bound, sigma = _bound_items(res.tables)
    true_f, true_se = res.true_fidelity()
    items = [("heralds_per_basis", n), ("mw3_phase", res.phase),
             ("attempts_per_herald", res.attempts / res.heralds),
             ("fidelity_bound", bound), ("fidelity_bound_err", sigma),
             ("true_fidelity", true_f), ("true_fidelity_err", true_se)]
    for basis, t in res.tables.items():
        for ion, photon in (("up", "V"), ("down", "H"), ("up", "H"), ("down", "V")):
            items.append((f"{basis}_P({ion}|{photon})", t.conditional(ion, photon)))
    print(out.summary(items), end="")
    return 0


def _storage_rows(res):
    for i, label in enumerate(sequence.MUB_LABELS):
        n = int(res.trials[i])
        yield label, n, int(res.passes[i]), res.fidelities[i], (
            analysis.binomial_error(int(res.passes[i]), n) if n else math.nan)


def cmd_storage(args, cfg, out):
    n = args.trials or 6000
    if args.time <= 0:
        raise InputError("--time must be positive")
    res = sequence.run_storage_experiment(cfg, args.time, n, seed=args.seed, workers=args.workers)
    out.csv("mub.csv", ["state", "trials", "passes", "fidelity", "error"], _storage_rows(res))
    mean, se = res.average()
    items = [("storage_time", args.time), ("trials", n), ("mub_average", mean),
             ("mub_average_err", se), ("model_average", sequence.expected_storage_fidelity(cfg, args.time))]
    if args.sweep_points > 0:
        if not 0 < args.sweep_min < args.sweep_max:
            raise InputError("need 0 < --sweep-min < --sweep-max")
        Ts = np.linspace(args.sweep_min, args.sweep_max, args.sweep_points)
        F, err = [], []
        for j, T in enumerate(Ts):
            r = sequence.run_storage_experiment(cfg, float(T), args.sweep_trials, (2,),
                                                seed=args.seed + j + 1, workers=args.workers)
            k = int(r.passes[2])
            F.append(k / args.sweep_trials)
            err.append(max(analysis.binomial_error(k, args.sweep_trials), 1 / args.sweep_trials))
        out.csv("sweep.csv", ["T", "fidelity", "error"], zip(Ts, F, err))
        out.csv("plot_storage_sweep.csv", ["T", "fidelity"], zip(Ts, F))
        if args.sweep_points >= 8:
            fit = analysis.fit_storage(Ts, F, err)
            out.csv("fit.csv", ["parameter", "value", "error"],
                    [(k, v, fit.errors[k]) for k, v in fit.params.items()])
            items += [("fit_converged", fit.converged), ("fit_message", fit.message)]
            items += [(f"fit_{k}", v) for k, v in fit.params.items()]
            items += [(f"fit_{k}_err", v) for k, v in fit.errors.items()]
            if "frequency" in fit.extra:
                items += [("fit_frequency_hz", fit.extra["frequency"]),
                          ("fit_frequency_hz_err", fit.extra["frequency_err"])]
    print(out.summary(items), end="")
    return 0


def cmd_combined(args, cfg, out):
    n = args.trials or 2000
    if not args.detector and args.noise == "on":
        cfg = cfg.with_detector("emccd")
    if args.time <= 0:
        raise InputError("--time must be positive")
    window = args.time / 2 if args.window is None else args.window
    if not 0 <= window <= args.time / 2:
        raise InputError("--window must be between 0 and T/2")
    phase = args.phase
    if phase is None:
        scan = sequence.phase_scan(cfg, args.scan_heralds, seed=args.seed, workers=args.workers)
        phase = scan.optimum if math.isfinite(scan.optimum) else 0.0
    res = sequence.run_combined_experiment(
        cfg, args.time, n, window=window, phase=phase, protected=args.protection == "on",
        seed=args.seed, workers=args.workers)
    base = sequence.run_storage_experiment(cfg, args.time, n, seed=args.seed, workers=args.workers)
    out.csv("correlations.csv", ["basis", "phase", "ion", "photon", "count", "conditional"],
            _table_rows(res.tables))
    out.csv("mub.csv", ["state", "trials", "passes", "fidelity", "error"], _storage_rows(res.memory))
    out.csv("trials.csv", ["trial", "heralded", "attempts", "basis", "photon", "ion", "memory"],
            ((i, int(r.heralded), r.attempts, r.basis, r.photon_outcome, r.ion_outcome,
              r.memory_outcome) for i, r in enumerate(res.records)))
    mem, mem_se = res.memory.average()
    ref, ref_se = base.average()
    bound, sigma = _bound_items(res.tables)
    items = [("storage_time", args.time), ("window", window), ("trials", n),
             ("protection", args.protection), ("mw3_phase", phase),
             ("success_fraction", res.success_fraction), ("mean_attempts", res.mean_attempts),
             ("mean_crosstalk_probability", res.mean_crosstalk),
             ("memory_fidelity", mem), ("memory_fidelity_err", mem_se),
             ("storage_only_fidelity", ref), ("storage_only_fidelity_err", ref_se),
             ("fidelity_drop", ref - mem),
             ("fidelity_bound", bound), ("fidelity_bound_err", sigma)]
    print(out.summary(items), end="")
    return 0


def crosstalk_rows(cfg):
    """Scenario table: name, distance, photon rate, duration, detuning, raw, clamped."""
    ent = crosstalk.ScatterScenario(cfg.wavelength, crosstalk.YB_GAMMA, cfg.rep_rate,
                                    cfg.ion_distance, 0.1)
    dop = crosstalk.ScatterScenario.doppler(1 / 6)
    far = crosstalk.ScatterScenario(cfg.wavelength, cfg.f_linewidth, cfg.rep_rate,
                                    cfg.ion_distance, 0.1, cfg.f_detuning)
    rows = []
    for name, s in (("entangling_photons", ent), ("doppler_cooling", dop), ("far_detuned", far)):
        raw, clamped = crosstalk.scattering_error(s)
        rows.append((name, s.d, s.scatter_rate, s.tau, s.Delta, raw, clamped))
    return rows


def cmd_crosstalk(args, cfg, out):
    rows = crosstalk_rows(cfg)
    out.csv("crosstalk.csv", ["scenario", "distance", "photon_rate", "duration",
                              "detuning", "eps_raw", "eps_clamped"], rows)
    k = cfg.pump_photon_count or 0
    comp = crosstalk.compound_error(rows[0][6], k)
    gammas = 2 * math.pi * np.linspace(1e6, 20e6, 20)
    out.csv("suppression.csv", ["Gamma", "suppression"],
            ((g, crosstalk.far_detuned_suppression(g, cfg.f_detuning)) for g in gammas))
    ds = np.geomspace(5e-6, 500e-6, 50)
    out.csv("plot_error_vs_distance.csv", ["distance", "eps_clamped"],
            ((d, crosstalk.scattering_error(crosstalk.ScatterScenario(
                cfg.wavelength, crosstalk.YB_GAMMA, cfg.rep_rate, d, 0.1))[1]) for d in ds))
    items = [(f"{r[0]}_eps_raw", r[5]) for r in rows] + [(f"{r[0]}_eps", r[6]) for r in rows]
    items += [("pump_photons", k), ("compound_error", comp),
              ("suppression", crosstalk.far_detuned_suppression(cfg.f_linewidth, cfg.f_detuning))]
    print(out.summary(items), end="")
    return 0


def cmd_budget(args, cfg, out):
    rate = analysis.rate_budget(cfg.rep_rate, cfg.solid_angle_fraction, sequence.COLLECTED_WEIGHT,
                                cfg.fiber_efficiency, cfg.detector_efficiency,
                                cfg.optics_transmission)
    terms = analysis.error_budget(cfg)
    out.csv("budget.csv", ["term", "infidelity", "formula"],
            ((t.name, t.infidelity, t.formula) for t in terms))
    total = sum(t.infidelity for t in terms)
    items = [("rate", rate), ("attempts_per_herald", 1 / sequence.herald_probability(cfg))]
    items += [(t.name, t.infidelity) for t in terms]
    items += [("total_infidelity", total)]
    print(out.summary(items), end="")
    return 0


def read_xy(path):
    """Read a numeric CSV (``#`` comments, one header row) into columns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if len(rows) < 2:
        raise InputError(f"{path}: need a header row and data rows")
    width = len(rows[0])
    if width < 2:
        raise InputError(f"{path}: need at least two columns")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != width:
        raise InputError(f"{path}: ragged rows")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite values")
    return rows[0], data


def cmd_fit(args, cfg, out):
    _, data = read_xy(args.input)
    x, y = data[:, 0], data[:, 1]
    sigma = data[:, 2] if data.shape[1] > 2 else None
    try:
        if args.model == "storage":
            fit = analysis.fit_storage(x, y, sigma)
        elif args.model == "conversion":
            fit = analysis.fit_conversion(x, y)
        else:
            fit = analysis.fit_phase_scan(x, y)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.csv("fit.csv", ["parameter", "value", "error"],
            [(k, v, fit.errors[k]) for k, v in fit.params.items()])
    items = [("model", args.model), ("points", len(x)), ("converged", fit.converged),
             ("rss", fit.rss), ("degenerate", ",".join(fit.degenerate)), ("message", fit.message)]
    items += list(fit.params.items()) + [(f"{k}_err", v) for k, v in fit.errors.items()]
    print(out.summary(items), end="")
    return 0 if fit.converged else 1


COMMANDS = {
    "entangle": cmd_entangle, "storage": cmd_storage, "combined": cmd_combined,
    "crosstalk": cmd_crosstalk, "budget": cmd_budget, "fit": cmd_fit,
}


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = resolve_config(args, _split_overrides(extra))
        if args.print_config:
            print(format_config(cfg), end="")
            return 0
        out = Output(args.out, _header(args))
        return COMMANDS[args.command](args, cfg, out)
    except InputError as exc:
        print(f"ionnode: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"ionnode: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
