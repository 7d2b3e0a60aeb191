"""Acceptance criteria 1-10.

Each test records a one-line verdict that is printed in the pytest summary
(section "acceptance criteria") and on stdout.
"""
import math

import numpy as np
import pytest
import scipy.linalg
from scipy import integrate

from conftest import ACCEPTANCE
from empbern.blocks import build_schedule, enumerate_pairs, pair_set_sizes
from empbern.correlations import corr_biased, corr_unbiased, pair_sums
from empbern.experiments import monotonicity_violations, rate_sweep, run_coverage, tau_sweep
from empbern.kernels import GramMatrix
from empbern.mixing import MixingModel
from empbern.processes import OU_MIXING_RATE, sample_ou, spawn_seeds, trace_c2_gaussian
from empbern.regression import FeatureData, assemble_covariances, empirical_risk, fit_rrr, model_select

OU = MixingModel.exponential(OU_MIXING_RATE)


def record(key, passed, detail):
    ACCEPTANCE[key] = (passed, detail)
    status = "PASS" if passed else ("INFO" if passed is None else "FAIL")
    print(f"[{status}] criterion {key}: {detail}")


def test_criterion_01_combinatorics():
    rng = np.random.default_rng(1)
    bad = []
    for m in range(1, 6):
        for tau in range(1, 6):
            s = build_schedule(2 * m * tau, tau)
            diag, off = enumerate_pairs(s)
            if (len(diag), len(off)) != (2 * m * tau**2, 2 * m * (m - 1) * tau**2):
                bad.append((m, tau, "size"))
            if pair_set_sizes(s) != (len(diag), len(off)):
                bad.append((m, tau, "pair_set_sizes"))
            X = rng.normal(size=(s.n_effective, 3))
            G = X @ X.T
            e_diag = math.fsum(G[t, u] for t, u in diag)
            e_off = math.fsum(G[t, u] for t, u in off)
            if pair_sums(G, s) != (e_diag, e_off):
                bad.append((m, tau, "sums"))
            if corr_biased(G, s).value != e_diag / len(diag):
                bad.append((m, tau, "biased"))
            if m >= 2 and corr_unbiased(G, s).value != (e_diag - e_off / (m - 1)) / len(diag):
                bad.append((m, tau, "unbiased"))
    record(1, not bad, f"25 (m, tau) pairs, exact sizes and sums; mismatches={bad}")
    assert not bad


def test_criterion_02_extreme_grams():
    n, c2 = 48, 1.0
    worst = 0.0
    for tau in (2, 3, 4):
        s = build_schedule(n, tau)
        blocks = np.zeros((n, n))
        for b in s.blocks():
            blocks[np.ix_(b, b)] = c2
        cases = [
            (np.eye(n), c2 / tau, c2 / tau),
            (blocks, c2, c2),
            (np.full((n, n), c2), c2, 0.0),
        ]
        for G, want_b, want_u in cases:
            worst = max(worst, abs(corr_biased(GramMatrix(G), s).value - want_b))
            worst = max(worst, abs(corr_unbiased(GramMatrix(G), s).value - want_u))
    ok = worst <= 1e-12
    record(2, ok, f"identity / aligned blocks / all-ones at n=48, tau in 2,3,4; max abs error {worst:.2e} (tol 1e-12)")
    assert ok


def test_criterion_03_trace_quadrature():
    phi = lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    worst = 0.0
    for l in (0.2, 1.0, 2.0, 10.0):
        f = lambda y, x: math.exp(-((x - y) ** 2) / l**2) * phi(x) * phi(y)
        val, _ = integrate.dblquad(f, -12, 12, -12, 12, epsabs=1e-12, epsrel=1e-12)
        worst = max(worst, abs(val - trace_c2_gaussian(l)))
    ok = worst <= 1e-6
    record(3, ok, f"closed-form tr(C^2) vs 2-D quadrature, l in 0.2,1,2,10; max abs error {worst:.2e} (tol 1e-6)")
    assert ok


@pytest.mark.slow
def test_criterion_04_coverage():
    s = run_coverage(500, n=1024, length_scale=1.0, delta=0.05, mixing=OU, bound="thm2",
                     seed=2024, n_batches=10, batch_size=1024)
    coverage = 1 - s.failure_rate
    ratio = max(r["true_error"] / r["bound"] for r in s.runs)
    ok = coverage >= 0.95
    record(4, ok, f"thm2 bound covers the true HS error in {coverage:.1%} of 500 OU runs (tau={s.tau}, "
                  f"need >= 95%); largest error/bound ratio {ratio:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_05_rates():
    ns = [2000, 5000, 10000, 20000]
    table, slopes = rate_sweep(ns, n_seeds=30, length_scale=0.5, delta=0.05, mixing=OU, seed=5)
    ordering = all(r["thm2"] < r["cov_ps"] and r["thm3"] < r["cov_ps"] for r in table)
    ebi_steep = slopes["thm2"] < -0.5 and slopes["thm3"] < -0.5
    ps_rate = abs(slopes["cov_ps"] + 0.5) <= 0.1
    ok = ordering and ebi_steep and ps_rate
    cells = "; ".join(f"n={r['n']} tau={r['tau']} thm2={r['thm2']:.4f} thm3={r['thm3']:.4f} ps={r['cov_ps']:.4f}"
                      for r in table)
    record(5, ok, f"EBI < PS at every n: {ordering}; slopes thm2={slopes['thm2']:.3f} thm3={slopes['thm3']:.3f} "
                  f"ps={slopes['cov_ps']:.3f} [{cells}]")
    assert ok


def test_criterion_06_unbiasedness():
    n, tau, reps = 64, 4, 10_000
    s = build_schedule(n, tau)
    rng = np.random.default_rng(6)
    X = rng.standard_normal((reps, n))
    vals = np.array([corr_unbiased(GramMatrix(np.outer(x, x)), s).value for x in X])
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(reps)
    z = (mean - 1 / tau) / se
    ok = abs(z) <= 3
    record(6, ok, f"mean unbiased proxy {mean:.5f} vs 1/tau = {1 / tau} ({z:+.2f} standard errors, need |z| <= 3)")
    assert ok


def test_criterion_07_risk_identity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        d, n = int(rng.integers(1, 9)), int(rng.integers(2, 65))
        data = FeatureData(rng.normal(size=(n, d)), rng.normal(size=(n, d)))
        direct, trace = empirical_risk(rng.normal(size=(d, d)), data)
        worst = max(worst, abs(direct - trace) / abs(direct))
    ok = worst <= 1e-10
    record(7, ok, f"100 random instances, max relative gap {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_08_rrr_structure():
    rng = np.random.default_rng(8)
    worst, rank_bad = 0.0, 0
    for _ in range(100):
        d = int(rng.integers(1, 9))
        r = int(rng.integers(1, d + 1))
        n = int(rng.integers(d + 1, 80))
        gamma = 10 ** rng.uniform(-6, 0)
        C, T, _ = assemble_covariances(FeatureData(rng.normal(size=(n, d)), rng.normal(size=(n, d))))
        model = fit_rrr(C, T, gamma, r)
        # independent oracle: scipy matrix square root and LAPACK gesvd
        root = np.real(scipy.linalg.sqrtm(C + gamma * np.eye(d)))
        M = np.linalg.solve(root, T)
        U, sv, Vt = scipy.linalg.svd(M, lapack_driver="gesvd")
        target = (U[:, :r] * sv[:r]) @ Vt[:r]
        worst = max(worst, np.linalg.norm(root @ model.G - target) / np.linalg.norm(target))
        gs = np.linalg.svd(model.G, compute_uv=False)
        rank_bad += int(np.sum(gs > 1e-8 * gs[0]) > r)
    ok = worst <= 1e-8 and rank_bad == 0
    record(8, ok, f"100 random instances: rank violations {rank_bad}, max relative SVD mismatch {worst:.2e} (tol 1e-8)")
    assert ok


GRID = [{"length_scale": l, "gamma": g, "rank": 3} for l in (0.05, 0.2, 0.5, 2.0) for g in (1e-8, 1e-6, 1e-4, 1e-2)]


@pytest.mark.slow
def test_criterion_09_model_selection():
    hits, notes = 0, []
    for seed in range(10):
        x = sample_ou(4096, seed).samples
        sel = model_select(x, GRID, delta=0.05, mixing=OU)
        rmse = sorted(r["holdout_rmse"] for r in sel.table)
        chosen = sel.best["holdout_rmse"]
        hits += chosen <= 1.5 * rmse[0]
        notes.append(f"s{seed}:{chosen / rmse[0]:.3f}(rank {rmse.index(chosen) + 1}/16, spread {rmse[-1] / rmse[0]:.3f})")
    ok = hits >= 8
    record(9, ok, f"bound-argmin RMSE within 1.5x of grid best in {hits}/10 seeds (need >= 8); "
                  f"chosen/best per seed: {' '.join(notes)}")
    assert ok


@pytest.mark.slow
def test_criterion_10_tau_monotonicity():
    x = sample_ou(10_000, 10).samples
    taus = list(range(16, 101, 4))
    rows = tau_sweep(x, taus, length_scale=1.0, delta=0.05, mixing=OU)
    assert [r["tau"] for r in rows] == taus
    counts = {name: monotonicity_violations(rows, name) for name in ("thm2", "thm3", "cov_ps", "cov_bernstein")}
    cells = " ".join(f"{r['tau']}:{r['thm2']:.4f}" for r in rows)
    record(10, True, f"tau sweep 16..100 step 4 at n=1e4 produced; decreases between consecutive taus "
                     f"(observational) {counts}; thm2 by tau: {cells}")
