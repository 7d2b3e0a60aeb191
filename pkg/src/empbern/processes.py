"""Synthetic processes with known mixing behaviour, and the covariance true-error oracle.

Randomness comes from :func:`numpy.random.default_rng` (PCG64).  Every
sampler takes an explicit seed; independent streams for repetitions are
derived with :class:`numpy.random.SeedSequence`.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ._validation import as_points, check_positive_int
from .exceptions import UnsupportedKernelError
from .kernels import GaussianKernel

OU_DECAY = math.exp(-1.0)
OU_NOISE = math.sqrt(1.0 - math.exp(-2.0))
# spectral gap of the OU transfer operator, used as the exponential mixing rate
OU_MIXING_RATE = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class Trajectory:
    samples: np.ndarray
    seed: object
    process_tag: str
    params: tuple = ()

    def __len__(self):
        return len(self.samples)


def spawn_seeds(seed, count):
    """``count`` independent integer seeds derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def sample_ou(n, seed=None):
    """Stationary AR(1) sampling of the Ornstein-Uhlenbeck process.

    ``X_0 ~ N(0, 1)`` and ``X_t = e^{-1} X_{t-1} + sqrt(1 - e^{-2}) eps_t``.
    """
    n = check_positive_int(n, "n")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal()
    eps = rng.standard_normal(n - 1)
    x = np.empty(n)
    x[0] = x0
    if n > 1:
        x[1:], _ = lfilter([OU_NOISE], [1.0, -OU_DECAY], eps, zi=[OU_DECAY * x0])
    return Trajectory(x, seed, "ou")


def sample_noisy_cycle(n, K, eta, seed=None):
    """Noisy ordered cycle on ``K`` states.

    From state ``i`` the chain moves to ``(i + 1) mod K`` with probability
    ``1 - eta`` and otherwise to one of the remaining ``K - 1`` states,
    uniformly.  The initial state is uniform, which is stationary.
    """
    n = check_positive_int(n, "n")
    K = check_positive_int(K, "K", minimum=2)
    if not 0 <= eta < 1:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    rng = np.random.default_rng(seed)
    start = rng.integers(K)
    perturbed = rng.random(n - 1) < eta
    jumps = np.where(perturbed, rng.integers(1, K, size=n - 1), 0)
    # next = current + 1 + jump (mod K); the jump is independent of the state
    steps = np.concatenate([[0], np.cumsum(1 + jumps)])
    states = (start + steps) % K
    return Trajectory(states.astype(np.int64), seed, "noisy_cycle", (("K", K), ("eta", float(eta))))


def one_hot_embed(traj, K):
    """Rows are indicator vectors of the visited states."""
    labels = np.asarray(getattr(traj, "samples", traj), dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"state labels must lie in [0, {K})")
    out = np.zeros((labels.size, K))
    out[np.arange(labels.size), labels] = 1.0
    return out


def trace_c2_gaussian(length_scale):
    """``tr(C^2) = E k(x, y)^2 = (1 + 4 / l^2)^{-1/2}`` for ``x, y ~ N(0, 1)`` i.i.d."""
    return 1.0 / math.sqrt(1.0 + 4.0 / length_scale**2)


def expected_sq_kernel_gaussian(x, length_scale):
    """``E_y k(x, y)^2`` for ``y ~ N(0, 1)``, elementwise in ``x``."""
    a = length_scale**2
    x = np.asarray(x, dtype=float)
    return math.sqrt(a / (a + 2.0)) * np.exp(-(x**2) / (a + 2.0))


def ou_hs_autocovariance(length_scale, lag, n_nodes=80):
    """Centered HS correlation ``E k(X_0, X_h)^2 - tr(C^2)`` of the stationary OU chain.

    Gauss-Hermite quadrature over the bivariate normal law of ``(X_0, X_h)``.
    """
    nodes, weights = np.polynomial.hermite_e.hermegauss(n_nodes)
    weights = weights / weights.sum()
    rho = OU_DECAY ** int(lag)
    x0 = nodes[:, None]
    xh = rho * x0 + math.sqrt(max(1.0 - rho**2, 0.0)) * nodes[None, :]
    vals = np.exp(-((x0 - xh) ** 2) / length_scale**2)
    return float(weights @ vals @ weights) - trace_c2_gaussian(length_scale)


def _mean_sq_kernel(kernel, X, Y, chunk=2048):
    total = 0.0
    for a in range(0, X.shape[0], chunk):
        total += kernel.squared(X[a : a + chunk], Y).sum()
    return total / (X.shape[0] * Y.shape[0])


@dataclass(frozen=True)
class TrueErrorEstimate:
    value: float
    std_error: float
    trace_chat_sq: float
    trace_c_sq: float
    trace_chat_c: float
    n_batches: int
    batch_size: int


def true_cov_error_sq(
    points,
    kernel,
    n_batches=100,
    batch_size=10_000,
    seed=None,
    sampler=sample_ou,
    base_gram=None,
    cross="resample",
    n_sub=10,
):
    """Estimate ``|C_hat - C|_HS^2 = tr(C_hat^2) + tr(C^2) - 2 tr(C_hat C)``.

    ``tr(C_hat^2)`` is exact from the training points, ``tr(C^2)`` uses the
    closed form under the ``N(0, 1)`` stationary law, and ``tr(C_hat C)`` is
    the mean of ``k(x~, x)^2`` over ``n_batches`` fresh trajectories of
    ``batch_size`` points drawn with ``sampler``.  The standard error comes
    from ``n_sub`` contiguous sub-batch means per batch.  ``cross="analytic"``
    replaces the resampled term by its closed form (standard error 0).
    """
    if not isinstance(kernel, GaussianKernel):
        raise UnsupportedKernelError("true covariance error needs a Gaussian kernel")
    X = as_points(points)
    if X.shape[1] != 1:
        raise UnsupportedKernelError("the closed form assumes one-dimensional N(0, 1) data")
    if base_gram is not None:
        t_hat_sq = float(np.mean(base_gram.entries**2))
    else:
        t_hat_sq = _mean_sq_kernel(kernel, X, X)
    t_c_sq = trace_c2_gaussian(kernel.length_scale)

    if cross == "analytic":
        t_cross = float(np.mean(expected_sq_kernel_gaussian(X[:, 0], kernel.length_scale)))
        se = 0.0
        n_batches = 0
    elif cross == "resample":
        check_positive_int(n_batches, "n_batches")
        check_positive_int(batch_size, "batch_size")
        sub_means = []
        for s in spawn_seeds(seed, n_batches):
            fresh = as_points(sampler(batch_size, s).samples)
            per_point = np.concatenate(
                [kernel.squared(fresh[a : a + 2048], X).mean(axis=1) for a in range(0, batch_size, 2048)]
            )
            sub_means.extend(c.mean() for c in np.array_split(per_point, min(n_sub, batch_size)))
        sub_means = np.asarray(sub_means)
        t_cross = float(sub_means.mean())
        se = 2.0 * float(sub_means.std(ddof=1)) / math.sqrt(sub_means.size) if sub_means.size > 1 else math.inf
    else:
        raise ValueError(f"cross must be 'resample' or 'analytic', got {cross!r}")

    value = t_hat_sq + t_c_sq - 2.0 * t_cross
    return TrueErrorEstimate(value, se, t_hat_sq, t_c_sq, t_cross, n_batches, batch_size)


def trajectory_csv_text(traj, header=None):
    """Single-column CSV with a comment header carrying the tag, parameters and seed."""
    params = ",".join(f"{k}={v}" for k, v in traj.params)
    tag = f"{traj.process_tag}({params})" if params else traj.process_tag
    lines = [f"# process_tag={tag}", f"# seed={traj.seed}"]
    lines.extend(f"# {line}" for line in header or ())
    if np.issubdtype(np.asarray(traj.samples).dtype, np.integer):
        lines.extend(str(int(v)) for v in traj.samples)
    else:
        lines.extend(f"{v:.17g}" for v in traj.samples)
    return "\n".join(lines) + "\n"


def save_trajectory_csv(traj, path, header=None):
    with open(path, "w") as fh:
        fh.write(trajectory_csv_text(traj, header))


def load_trajectory_csv(path):
    tag, seed, values = "unknown", None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key == "process_tag":
                    tag = val
                elif key == "seed":
                    seed = None if val == "None" else int(val)
                continue
            values.append(line.split(",")[0])
    if tag.startswith("noisy_cycle"):
        samples = np.array([int(v) for v in values], dtype=np.int64)
        inner = tag[tag.find("(") + 1 : tag.rfind(")")]
        kv = dict(p.split("=") for p in inner.split(",") if p)
        params = (("K", int(kv["K"])), ("eta", float(kv["eta"])))
        return Trajectory(samples, seed, "noisy_cycle", params)
    return Trajectory(np.array([float(v) for v in values]), seed, tag)
