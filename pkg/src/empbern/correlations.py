"""Variance proxies for the empirical Bernstein bounds.

All proxies are averages of Gram entries over the within-block pair set
``S_tau`` (and, for the u-statistic, the cross-block set ``S~_tau``).  Sums
over ``S_tau`` are never formed from explicit pair lists: the diagonal
``tau x tau`` blocks are read directly, and the cross-block sum is the
same-sequence total minus the diagonal part.
"""
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_points
from .blocks import block_sums, pair_set_sizes
from .exceptions import DimensionError, UndefinedStatisticError

# Above this many entries the cross-block sum uses BLAS instead of math.fsum.
_FSUM_LIMIT = 4_000_000

PROXY_KINDS = ("population", "biased", "unbiased", "scalar_block")


@dataclass(frozen=True)
class VarianceProxy:
    value: float
    kind: str
    tau: int
    m: int

    def __post_init__(self):
        if self.kind not in PROXY_KINDS:
            raise ValueError(f"unknown proxy kind {self.kind!r}")

    def __float__(self):
        return float(self.value)


def _check_size(n, schedule):
    if n < schedule.n_effective:
        raise DimensionError(
            f"Gram of size {n} is smaller than n_effective={schedule.n_effective}"
        )


def diagonal_block_sum(entries, schedule):
    """Correctly rounded sum of ``entries`` over ``S_tau``."""
    _check_size(entries.shape[0], schedule)
    tau = schedule.tau
    parts = [entries[s : s + tau, s : s + tau].ravel() for s in range(0, schedule.n_effective, tau)]
    return math.fsum(np.concatenate(parts)) if parts else 0.0


def cross_block_sum(entries, schedule):
    """Sum of ``entries`` over ``S~_tau``."""
    _check_size(entries.shape[0], schedule)
    if schedule.m < 2:
        return 0.0
    n_eff, tau = schedule.n_effective, schedule.tau
    labels = schedule.sequence_labels()[:n_eff]
    blocks = schedule.block_labels()[:n_eff]
    if n_eff * n_eff <= _FSUM_LIMIT:
        sub = entries[:n_eff, :n_eff]
        mask = (labels[:, None] == labels[None, :]) & (blocks[:, None] != blocks[None, :])
        return math.fsum(sub[mask])
    same = _same_sequence_totals(lambda a, b: entries[a:b, :n_eff], n_eff, [schedule])[0]
    return same - diagonal_block_sum(entries, schedule)


def pair_sums(gram, schedule):
    """``(sum over S_tau, sum over S~_tau)`` of a :class:`GramMatrix`."""
    entries = gram.entries if hasattr(gram, "entries") else np.asarray(gram, dtype=float)
    return diagonal_block_sum(entries, schedule), cross_block_sum(entries, schedule)


def corr_biased(gram, schedule):
    """Biased proxy: average Gram entry over ``S_tau``."""
    s_diag = diagonal_block_sum(_entries(gram), schedule)
    size, _ = pair_set_sizes(schedule)
    return VarianceProxy(s_diag / size, "biased", schedule.tau, schedule.m)


def corr_unbiased(gram, schedule):
    """u-statistic proxy; may be negative on finite samples."""
    if schedule.m < 2:
        raise UndefinedStatisticError("the unbiased proxy needs m >= 2 blocks per sequence")
    s_diag, s_cross = pair_sums(_entries(gram), schedule)
    return proxies_from_sums(s_diag, s_cross, schedule)[1]


def proxies_from_sums(sum_diag, sum_cross, schedule):
    """Build the biased and unbiased proxies from precomputed pair sums.

    The unbiased proxy is ``None`` when ``m == 1``.
    """
    size, _ = pair_set_sizes(schedule)
    biased = VarianceProxy(sum_diag / size, "biased", schedule.tau, schedule.m)
    if schedule.m < 2:
        return biased, None
    value = (sum_diag - sum_cross / (schedule.m - 1)) / size
    return biased, VarianceProxy(value, "unbiased", schedule.tau, schedule.m)


def corr_population(covfn, schedule):
    """Average of a known centered correlation function over ``S_tau``.

    ``covfn(t, s)`` receives 1-based integer arrays and must broadcast.
    """
    total = []
    for block in schedule.blocks():
        t = block + 1
        total.append(np.broadcast_to(covfn(t[:, None], t[None, :]), (t.size, t.size)).ravel())
    size, _ = pair_set_sizes(schedule)
    value = math.fsum(np.concatenate(total)) / size
    return VarianceProxy(value, "population", schedule.tau, schedule.m)


def corr_population_stationary(acf, schedule):
    """:func:`corr_population` for a stationary process given its autocovariance ``acf(lag)``."""
    tau = schedule.tau
    lags = np.arange(tau)
    weights = np.where(lags == 0, tau, 2 * (tau - lags))
    acf_values = np.asarray([acf(int(h)) for h in lags], dtype=float)
    value = math.fsum(weights * acf_values) / tau**2
    return VarianceProxy(value, "population", schedule.tau, schedule.m)


def scalar_block_variance(values, schedule):
    """Pairwise u-statistic of the block sums of a scalar sequence.

    ``(1 / (m (m-1) tau^2)) * sum_{i<j} (Wbar_i - Wbar_j)^2 + (Wbar'_i - Wbar'_j)^2``
    """
    if schedule.m < 2:
        raise UndefinedStatisticError("block variance needs m >= 2 blocks per sequence")
    first, second = block_sums(values, schedule)
    m, tau = schedule.m, schedule.tau
    # sum_{i<j} (a_i - a_j)^2 == m * sum_i (a_i - mean)^2
    spread = m * (np.sum((first - first.mean()) ** 2) + np.sum((second - second.mean()) ** 2))
    return VarianceProxy(float(spread) / (m * (m - 1) * tau**2), "scalar_block", tau, m)


def _entries(gram):
    return gram.entries if hasattr(gram, "entries") else np.asarray(gram, dtype=float)


def _same_sequence_totals(rows, n, schedules, chunk=1024):
    """Sum of Gram entries over pairs in the same sequence, for each schedule.

    ``rows(a, b)`` returns Gram rows ``a:b`` restricted to the first ``n``
    columns.  With ``u`` the indicator of retained indices and ``sigma = +-1``
    the sequence sign, the same-sequence total is
    ``(u' G u + sigma' G sigma) / 2``.
    """
    vecs = np.zeros((n, 2 * len(schedules)))
    for j, sched in enumerate(schedules):
        labels = sched.sequence_labels()
        labels = labels[:n] if labels.size >= n else np.pad(labels, (0, n - labels.size), constant_values=-1)
        keep = labels >= 0
        vecs[keep, 2 * j] = 1.0
        vecs[keep, 2 * j + 1] = np.where(labels[keep] == 0, 1.0, -1.0)
    quad = np.zeros(vecs.shape[1])
    for a in range(0, n, chunk):
        b = min(a + chunk, n)
        block = rows(a, b)
        quad += np.einsum("ij,ij->j", block @ vecs, vecs[a:b])
    return [0.5 * (quad[2 * j] + quad[2 * j + 1]) for j in range(len(schedules))]


def streamed_pair_sums(entry_block, n, schedules, chunk=1024):
    """Pair sums for several schedules without materializing the ``n x n`` Gram.

    ``entry_block(r0, r1, c0, c1)`` must return the Gram sub-matrix
    ``[r0:r1, c0:c1]``.  Returns a list of ``(sum over S_tau, sum over S~_tau)``
    in the order of ``schedules``.
    """
    for sched in schedules:
        if sched.n_effective > n:
            raise DimensionError(f"schedule needs {sched.n_effective} points, have {n}")
    totals = _same_sequence_totals(lambda a, b: entry_block(a, b, 0, n), n, schedules, chunk)
    out = []
    for sched, total in zip(schedules, totals):
        tau = sched.tau
        parts = [
            entry_block(s, s + tau, s, s + tau).ravel()
            for s in range(0, sched.n_effective, tau)
        ]
        s_diag = math.fsum(np.concatenate(parts))
        out.append((s_diag, total - s_diag if sched.m >= 2 else 0.0))
    return out


def squared_kernel_blocks(kernel, points):
    """``entry_block`` callable for the covariance-operator Gram ``k(x_t, x_s)^2``."""
    X = as_points(points)

    def entry_block(r0, r1, c0, c1):
        return kernel.squared(X[r0:r1], X[c0:c1])

    return entry_block, X.shape[0]


def lag_product_kernel_blocks(kernel, points):
    """``entry_block`` for the cross-covariance Gram from ``n + 1`` points."""
    X = as_points(points)

    def entry_block(r0, r1, c0, c1):
        return kernel(X[r0:r1], X[c0:c1]) * kernel(X[r0 + 1 : r1 + 1], X[c0 + 1 : c1 + 1])

    return entry_block, X.shape[0] - 1
