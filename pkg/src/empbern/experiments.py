"""Monte Carlo harnesses: coverage of the covariance bounds, tau sweeps and rate sweeps."""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.stats import binomtest

from .blocks import build_schedule
from .covariance import covariance_proxies, covariance_reports
from .exceptions import InfeasibleScheduleError
from .kernels import GaussianKernel
from .mixing import MixingModel, min_feasible_tau
from .processes import OU_MIXING_RATE, sample_ou, spawn_seeds, true_cov_error_sq


def ou_mixing():
    return MixingModel.exponential(OU_MIXING_RATE)


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _resolve_tau(tau, delta, n, mixing):
    if tau is not None:
        return int(tau)
    search = min_feasible_tau(delta, n, mixing)
    if not search.feasible:
        raise InfeasibleScheduleError(f"no feasible tau for n={n}, delta={delta}")
    return search.tau


def _coverage_run(seed, n, length_scale, delta, tau, mixing, bound, n_batches, batch_size):
    traj_seed, resample_seed = spawn_seeds(seed, 2)
    x = sample_ou(n, traj_seed).samples
    schedule = build_schedule(n, tau)
    x = x[: schedule.n_effective]
    kernel = GaussianKernel(length_scale)
    (vb, vu), = covariance_proxies(kernel, x, [schedule])
    report = covariance_reports(vb, vu, schedule, 1.0, delta, mixing, (bound,))[bound]
    est = true_cov_error_sq(x, kernel, n_batches, batch_size, seed=resample_seed)
    error = math.sqrt(max(est.value, 0.0))
    return {
        "seed": seed,
        "bound": report.value,
        "true_error": error,
        "true_error_sq": est.value,
        "std_error": est.std_error,
        "failed": bool(error > report.value),
    }


@dataclass
class CoverageSummary:
    repetitions: int
    failures: int
    failure_rate: float
    ci_low: float
    ci_high: float
    delta: float
    tau: int
    bound: str
    runs: list = field(default_factory=list)

    def to_dict(self, with_runs=False):
        out = {k: getattr(self, k) for k in
               ("repetitions", "failures", "failure_rate", "ci_low", "ci_high", "delta", "tau", "bound")}
        if with_runs:
            out["runs"] = self.runs
        return out


def run_coverage(
    repetitions,
    n=1024,
    length_scale=1.0,
    delta=0.05,
    mixing=None,
    tau=None,
    bound="thm2",
    seed=0,
    n_batches=10,
    batch_size=1024,
    jobs=1,
):
    """Empirical failure rate of a covariance bound over independent OU trajectories.

    A run fails when the estimated true HS error exceeds the bound.  The
    confidence interval is the exact (Clopper-Pearson) 95% binomial interval.
    """
    if repetitions < 10:
        raise ValueError("coverage needs at least 10 repetitions")
    mixing = ou_mixing() if mixing is None else mixing
    tau = _resolve_tau(tau, delta, n, mixing)
    fn = partial(
        _coverage_run, n=n, length_scale=length_scale, delta=delta, tau=tau,
        mixing=mixing, bound=bound, n_batches=n_batches, batch_size=batch_size,
    )
    runs = _map(fn, spawn_seeds(seed, repetitions), jobs)
    failures = sum(r["failed"] for r in runs)
    ci = binomtest(failures, repetitions).proportion_ci(0.95, method="exact")
    return CoverageSummary(
        repetitions, failures, failures / repetitions, float(ci.low), float(ci.high),
        delta, tau, bound, runs,
    )


def tau_sweep(x, taus, length_scale=1.0, delta=0.05, mixing=None,
              methods=("thm2", "thm3", "cov_ps", "cov_bernstein")):
    """Covariance bounds of one trajectory for several block lengths.

    The unbiased proxies of all schedules share a single pass over the Gram.
    """
    mixing = ou_mixing() if mixing is None else mixing
    x = np.asarray(x, dtype=float)
    schedules = [build_schedule(x.size, t) for t in taus]
    proxies = covariance_proxies(GaussianKernel(length_scale), x, schedules)
    rows = []
    for sched, (vb, vu) in zip(schedules, proxies):
        reports = covariance_reports(vb, vu, sched, 1.0, delta, mixing, methods)
        row = {"tau": sched.tau, "m": sched.m, "n_effective": sched.n_effective,
               "v_biased": vb.value, "v_unbiased": vu.value if vu is not None else math.nan}
        for name, rep in reports.items():
            row[name] = rep.value
            row[f"{name}_feasible"] = rep.feasible
        row["delta_tau"] = next(iter(reports.values())).delta_effective["delta_tau"]
        rows.append(row)
    return rows


def monotonicity_violations(rows, column):
    """Count decreases of ``column`` between consecutive feasible taus."""
    vals = [r[column] for r in rows if math.isfinite(r[column])]
    return int(sum(b < a for a, b in zip(vals, vals[1:])))


def _rate_run(seed, ns, length_scale, delta, mixing):
    out = {}
    x_full = sample_ou(max(ns), seed).samples
    kernel = GaussianKernel(length_scale)
    for n in ns:
        tau = _resolve_tau(None, delta, n, mixing)
        sched = build_schedule(n, tau)
        x = x_full[: sched.n_effective]
        (vb, vu), = covariance_proxies(kernel, x, [sched])
        reps = covariance_reports(vb, vu, sched, 1.0, delta, mixing)
        out[n] = {name: r.value for name, r in reps.items()}
        out[n]["tau"] = tau
    return out


def rate_sweep(ns, n_seeds=30, length_scale=0.5, delta=0.05, mixing=None, seed=0, jobs=1):
    """Seed-averaged covariance bounds against sample size, with log-log slopes.

    Returns ``(table, slopes)``: one row per ``n`` and the slope of each
    bound between the smallest and largest ``n``.
    """
    mixing = ou_mixing() if mixing is None else mixing
    ns = sorted(int(n) for n in ns)
    fn = partial(_rate_run, ns=ns, length_scale=length_scale, delta=delta, mixing=mixing)
    runs = _map(fn, spawn_seeds(seed, n_seeds), jobs)
    table = []
    for n in ns:
        row = {"n": n, "tau": runs[0][n]["tau"]}
        for name in ("thm2", "thm3", "cov_ps", "cov_bernstein"):
            row[name] = float(np.mean([r[n][name] for r in runs]))
        table.append(row)
    lo, hi = table[0], table[-1]
    slopes = {
        name: math.log(hi[name] / lo[name]) / math.log(hi["n"] / lo["n"])
        for name in ("thm2", "thm3", "cov_ps", "cov_bernstein")
    }
    return table, slopes
