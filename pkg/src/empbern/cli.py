"""Command-line interface: ``empbern {simulate,bound,coverage,model-select,true-error}``.

Every command accepts ``--config FILE`` with flat ``key = value`` lines;
explicit flags override file values.  The effective configuration is echoed
into each output.  Exit codes: 0 success (including infeasible sweeps),
2 invalid configuration, 3 runtime or data error.
"""
import argparse
import logging
import sys

import numpy as np

from . import serialization
from .blocks import build_schedule
from .bounds import bound_thm1
from .correlations import corr_population_stationary
from .covariance import covariance_proxies, covariance_reports
from .exceptions import AllInfeasibleError, InfeasibleScheduleError, UnsupportedKernelError
from .experiments import monotonicity_violations, run_coverage
from .kernels import GaussianKernel, LinearKernel, make_kernel
from .mixing import MixingModel, min_feasible_tau
from .processes import (
    load_trajectory_csv,
    one_hot_embed,
    sample_noisy_cycle,
    sample_ou,
    ou_hs_autocovariance,
    trajectory_csv_text,
    true_cov_error_sq,
)
from .regression import model_select

log = logging.getLogger("empbern")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _taus(text):
    text = str(text)
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(v) for v in text.split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# name -> (type, default, help)
COMMON = {
    "seed": (int, 0, "random seed"),
}
OPTIONS = {
    "simulate": {
        "process": (str, "ou", "ou or cycle"),
        "n": (int, 1000, "trajectory length"),
        "K": (int, 5, "number of cycle states"),
        "eta": (float, 0.1, "cycle perturbation probability"),
        "out": (str, "-", "output CSV path ('-' for stdout)"),
    },
    "bound": {
        "input": (str, "", "trajectory CSV (simulated OU when empty)"),
        "n": (int, 2048, "length of the simulated trajectory when no input is given"),
        "kernel": (str, "gaussian", "gaussian or linear"),
        "length_scale": (float, 1.0, "Gaussian kernel length scale"),
        "delta": (float, 0.05, "failure probability"),
        "mixing": (str, "exponential:0.6321205588285577", "none | exponential:<p> | algebraic:<p> | table:<path>"),
        "tau": (str, "auto", "block length, or 'auto' for the smallest feasible one"),
        "tau_sweep": (str, "", "block lengths 'a:b[:step]' or 'a,b,c'"),
        "require_lagged": (_bool, False, "auto tau must also make delta'(tau) positive"),
        "bounds": (str, "thm2,thm3,cov_ps,cov_bernstein", "comma-separated bound names (thm1 needs OU)"),
        "out": (str, "-", "output JSON-lines path"),
    },
    "coverage": {
        "repetitions": (int, 500, "independent trajectories"),
        "n": (int, 1024, "trajectory length"),
        "length_scale": (float, 1.0, "Gaussian kernel length scale"),
        "delta": (float, 0.05, "failure probability"),
        "mixing": (str, "exponential:0.6321205588285577", "mixing model"),
        "tau": (str, "auto", "block length or 'auto'"),
        "bound": (str, "thm2", "thm2, thm3, cov_ps or cov_bernstein"),
        "batches": (int, 10, "fresh batches for the true error"),
        "batch_size": (int, 1024, "points per fresh batch"),
        "jobs": (int, 1, "worker processes"),
        "out": (str, "-", "summary JSON path"),
    },
    "model-select": {
        "input": (str, "", "trajectory CSV (simulated OU when empty)"),
        "n": (int, 4096, "length of the simulated trajectory"),
        "length_scales": (str, "0.05,0.2,0.5,2", "feature length scales"),
        "gammas": (str, "1e-8,1e-6,1e-4,1e-2", "Tikhonov weights"),
        "rank": (int, 3, "rank cap"),
        "n_centers": (int, 16, "Gaussian feature centers"),
        "delta": (float, 0.05, "failure probability"),
        "mixing": (str, "exponential:0.6321205588285577", "mixing model"),
        "tau": (str, "auto", "block length or 'auto'"),
        "train_fraction": (float, 0.75, "contiguous training prefix"),
        "proxies_on": (str, "train", "train or all"),
        "out": (str, "-", "ranked CSV path"),
    },
    "true-error": {
        "input": (str, "", "trajectory CSV (simulated OU when empty)"),
        "n": (int, 1000, "length of the simulated trajectory"),
        "kernel": (str, "gaussian", "kernel (only gaussian is supported)"),
        "length_scale": (float, 1.0, "Gaussian kernel length scale"),
        "batches": (int, 100, "fresh batches"),
        "batch_size": (int, 10000, "points per fresh batch"),
        "cross": (str, "resample", "resample or analytic"),
        "out": (str, "-", "output JSON path"),
    },
}


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="empbern", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in OPTIONS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key=value config file")
        for name, (_, default, help_text) in {**COMMON, **opts}.items():
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, default=None, help=f"{help_text} (default: {default})")
    return parser


def effective_config(args):
    opts = {**COMMON, **OPTIONS[args.command]}
    raw = {name: default for name, (_, default, _) in opts.items()}
    if args.config:
        from_file = read_config(args.config)
        unknown = sorted(set(from_file) - set(opts))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        raw.update(from_file)
    for name in opts:
        value = getattr(args, name)
        if value is not None:
            raw[name] = value
    cfg = {}
    for name, (typ, _, _) in opts.items():
        try:
            cfg[name] = typ(raw[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {name}: {raw[name]!r}") from exc
    return cfg


def _provenance(cfg):
    # the output path is not part of the result, so identical runs stay byte-identical
    return {k: v for k, v in cfg.items() if k != "out"}


def _write(text, path):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _check(cond, message):
    if not cond:
        raise ConfigError(message)


def _mixing(cfg):
    try:
        return MixingModel.parse(cfg["mixing"])
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad mixing spec {cfg['mixing']!r}: {exc}") from exc


def _load_states(cfg):
    if cfg["input"]:
        return load_trajectory_csv(cfg["input"])
    _check(cfg["n"] >= 2, "n must be >= 2")
    return sample_ou(cfg["n"], cfg["seed"])


def cmd_simulate(cfg):
    _check(cfg["n"] >= 1, "n must be >= 1")
    if cfg["process"] == "ou":
        traj = sample_ou(cfg["n"], cfg["seed"])
    elif cfg["process"] == "cycle":
        _check(cfg["K"] >= 2, "K must be >= 2")
        _check(0 <= cfg["eta"] < 1, "eta must lie in [0, 1)")
        traj = sample_noisy_cycle(cfg["n"], cfg["K"], cfg["eta"], cfg["seed"])
    else:
        raise ConfigError(f"unknown process {cfg['process']!r}")
    _write(trajectory_csv_text(traj, ["config " + serialization.dumps(_provenance(cfg))]), cfg["out"])
    return EXIT_OK


def cmd_bound(cfg):
    _check(0 < cfg["delta"] < 1, "delta must lie in (0, 1)")
    mixing = _mixing(cfg)
    traj = _load_states(cfg)
    if traj.process_tag == "noisy_cycle":
        K = dict(traj.params)["K"]
        points, kernel = one_hot_embed(traj, K), LinearKernel()
    else:
        points = np.asarray(traj.samples, dtype=float)
        try:
            kernel = make_kernel(cfg["kernel"], cfg["length_scale"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    n = points.shape[0]
    names = [b.strip() for b in cfg["bounds"].split(",") if b.strip()]
    known = {"thm1", "thm2", "thm3", "cov_ps", "cov_bernstein"}
    _check(names and set(names) <= known, f"bounds must be a subset of {sorted(known)}")
    if cfg["tau_sweep"]:
        taus = _taus(cfg["tau_sweep"])
    elif cfg["tau"] == "auto":
        search = min_feasible_tau(cfg["delta"], n, mixing, require_lagged=cfg["require_lagged"])
        taus = [search.tau if search.feasible else search.best_tau]
    else:
        taus = [int(cfg["tau"])]
    _check(all(1 <= t <= n // 2 for t in taus), f"every tau must lie in [1, {n // 2}]")
    schedules = [build_schedule(n, t) for t in taus]
    c = float(np.max(kernel.diag(points)))
    proxies = covariance_proxies(kernel, points, schedules)
    lines = [serialization.dumps({"config": _provenance(cfg)})]
    rows = []
    for sched, (vb, vu) in zip(schedules, proxies):
        cov_names = [b for b in names if b != "thm1"]
        reports = covariance_reports(vb, vu, sched, c, cfg["delta"], mixing, cov_names)
        if "thm1" in names:
            _check(isinstance(kernel, GaussianKernel) and traj.process_tag == "ou",
                   "thm1 needs the analytic OU correlation and a Gaussian kernel")
            reports["thm1"] = bound_thm1(_ou_population_proxy(kernel, sched), sched.n_effective,
                                         sched.tau, c, cfg["delta"], mixing)
        for name in names:
            if name not in reports:
                continue
            rec = {"tau": sched.tau, "m": sched.m, "n_effective": sched.n_effective, **reports[name].to_dict()}
            lines.append(serialization.dumps(rec))
            rows.append(rec)
    if len(taus) > 1:
        summary = {"monotonicity_violations": {}}
        for name in names:
            col = [{"v": r["value"]} for r in rows if r["bound"] == name]
            summary["monotonicity_violations"][name] = monotonicity_violations(col, "v")
        lines.append(serialization.dumps(summary))
    _write("\n".join(lines) + "\n", cfg["out"])
    return EXIT_OK


def _ou_population_proxy(kernel, schedule):
    return corr_population_stationary(lambda h: ou_hs_autocovariance(kernel.length_scale, h), schedule)


def cmd_coverage(cfg):
    _check(cfg["repetitions"] >= 10, "coverage needs at least 10 repetitions")
    _check(0 < cfg["delta"] < 1, "delta must lie in (0, 1)")
    _check(cfg["bound"] in ("thm2", "thm3", "cov_ps", "cov_bernstein"), "unknown bound")
    mixing = _mixing(cfg)
    tau = None if cfg["tau"] == "auto" else int(cfg["tau"])
    summary = run_coverage(
        cfg["repetitions"], n=cfg["n"], length_scale=cfg["length_scale"], delta=cfg["delta"],
        mixing=mixing, tau=tau, bound=cfg["bound"], seed=cfg["seed"], n_batches=cfg["batches"],
        batch_size=cfg["batch_size"], jobs=cfg["jobs"],
    )
    _write(serialization.dumps({"config": _provenance(cfg), **summary.to_dict()}) + "\n", cfg["out"])
    return EXIT_OK


def cmd_model_select(cfg):
    _check(0 < cfg["delta"] < 1, "delta must lie in (0, 1)")
    mixing = _mixing(cfg)
    traj = _load_states(cfg)
    grid = [
        {"length_scale": ls, "gamma": g, "rank": cfg["rank"]}
        for ls in _floats(cfg["length_scales"])
        for g in _floats(cfg["gammas"])
    ]
    _check(grid, "empty grid")
    tau = None if cfg["tau"] == "auto" else int(cfg["tau"])
    try:
        result = model_select(
            traj.samples, grid, delta=cfg["delta"], tau=tau, mixing=mixing,
            train_fraction=cfg["train_fraction"], n_centers=cfg["n_centers"],
            proxies_on=cfg["proxies_on"],
        )
    except AllInfeasibleError as exc:
        table = exc.table or []
        _write(serialization.csv_text(table, header_lines=["config " + serialization.dumps(_provenance(cfg))]), cfg["out"])
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write(serialization.csv_text(result.table, header_lines=["config " + serialization.dumps(_provenance(cfg))]), cfg["out"])
    best = result.best
    print(
        f"best config {best['config']}: length_scale={best['length_scale']} gamma={best['gamma']} "
        f"rank={best['rank']} bound={best['bound']:.6g}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_true_error(cfg):
    _check(cfg["kernel"] == "gaussian", f"unsupported kernel {cfg['kernel']!r}: only gaussian has a closed form")
    _check(cfg["cross"] in ("resample", "analytic"), "cross must be resample or analytic")
    traj = _load_states(cfg)
    est = true_cov_error_sq(
        traj.samples, GaussianKernel(cfg["length_scale"]), n_batches=cfg["batches"],
        batch_size=cfg["batch_size"], seed=cfg["seed"], cross=cfg["cross"],
    )
    out = {
        "config": _provenance(cfg),
        "true_error_sq": est.value,
        "std_error": est.std_error,
        "trace_chat_sq": est.trace_chat_sq,
        "trace_c_sq": est.trace_c_sq,
        "trace_chat_c": est.trace_chat_c,
        "n_batches": est.n_batches,
        "batch_size": est.batch_size,
    }
    _write(serialization.dumps(out) + "\n", cfg["out"])
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "coverage": cmd_coverage,
    "model-select": cmd_model_select,
    "true-error": cmd_true_error,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = effective_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, UnsupportedKernelError, InfeasibleScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
