"""Bounds on the covariance-operator estimation error from a single trajectory."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_points, check_probability
from .blocks import build_schedule
from .bounds import bound_cov_bernstein, bound_cov_ps, bound_thm2, bound_thm3
from .correlations import proxies_from_sums, squared_kernel_blocks, streamed_pair_sums
from .exceptions import InfeasibleScheduleError
from .kernels import make_kernel
from .mixing import MixingModel, min_feasible_tau

METHODS = ("thm2", "thm3", "cov_ps", "cov_bernstein")


def covariance_proxies(kernel, points, schedules, chunk=1024):
    """Biased and unbiased proxies of the covariance-operator Gram for each schedule."""
    entry_block, n = squared_kernel_blocks(kernel, points)
    sums = streamed_pair_sums(entry_block, n, schedules, chunk=chunk)
    return [proxies_from_sums(sd, sc, s) for (sd, sc), s in zip(sums, schedules)]


def covariance_reports(vb, vu, schedule, c_H, delta, mixing, methods=METHODS):
    """Evaluate the requested covariance bounds for one schedule."""
    n, tau = schedule.n_effective, schedule.tau
    out = {}
    for name in methods:
        if name == "thm2":
            out[name] = bound_thm2(vb, n, tau, c_H, delta, mixing)
        elif name == "thm3":
            if vu is not None:
                out[name] = bound_thm3(vu, n, tau, c_H, delta, mixing)
        elif name == "cov_ps":
            out[name] = bound_cov_ps(n, tau, c_H, delta, mixing)
        elif name == "cov_bernstein":
            out[name] = bound_cov_bernstein(n, tau, c_H, delta, mixing)
        else:
            raise ValueError(f"unknown covariance bound {name!r}")
    return out


class CovarianceBound(BaseEstimator):
    """High-probability bound on ``|C_hat - C|_HS`` for kernel covariance operators.

    ``fit(X)`` reads a trajectory, picks the block length (the smallest
    feasible one when ``tau=None``), computes the variance proxies of the
    rank-one operators ``phi(x_t) (x) phi(x_t)`` and evaluates the bounds
    listed in ``methods``.  Trailing samples that do not fill a block pair
    are dropped.

    Attributes
    ----------
    tau_ : int
    schedule_ : BlockSchedule
    proxies_ : dict
        ``{"biased": VarianceProxy, "unbiased": VarianceProxy or None}``
    reports_ : dict
        Bound name to :class:`BoundReport`.
    bound_ : float
        Value of the first method in ``methods``.
    """

    def __init__(
        self,
        kernel="gaussian",
        length_scale=1.0,
        delta=0.05,
        tau=None,
        mixing=None,
        methods=("thm2", "thm3"),
    ):
        self.kernel = kernel
        self.length_scale = length_scale
        self.delta = delta
        self.tau = tau
        self.mixing = mixing
        self.methods = methods

    def _mixing(self):
        if self.mixing is None:
            return MixingModel.none()
        if isinstance(self.mixing, str):
            return MixingModel.parse(self.mixing)
        return self.mixing

    def fit(self, X, y=None):
        check_probability(self.delta)
        X = as_points(X)
        self.n_features_in_ = X.shape[1]
        mixing = self._mixing()
        n = X.shape[0]
        if self.tau is None:
            search = min_feasible_tau(self.delta, n, mixing)
            if not search.feasible:
                raise InfeasibleScheduleError(
                    f"no block length makes delta(tau) positive for n={n}; best {search.best_delta:.3g}"
                )
            tau = search.tau
        else:
            tau = int(self.tau)
        kern = make_kernel(self.kernel, self.length_scale)
        schedule = build_schedule(n, tau)
        c_H = float(np.max(kern.diag(X)))
        (vb, vu), = covariance_proxies(kern, X[: schedule.n_effective], [schedule])
        self.tau_ = tau
        self.schedule_ = schedule
        self.c_H_ = c_H
        self.proxies_ = {"biased": vb, "unbiased": vu}
        self.reports_ = covariance_reports(vb, vu, schedule, c_H, self.delta, mixing, self.methods)
        self.bound_ = self.reports_[self.methods[0]].value
        return self

    def report(self, method=None):
        check_is_fitted(self, "reports_")
        return self.reports_[method or self.methods[0]]
