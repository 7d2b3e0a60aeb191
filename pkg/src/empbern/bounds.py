"""Concentration and risk bounds.

Every function returns a :class:`BoundReport`.  When a mixing-adjusted
failure probability is not positive the report is infeasible (value
``inf``) instead of raising, so that sweeps over ``tau`` can tabulate it.
Logarithms are natural.
"""
import math
from dataclasses import dataclass, field

from ._validation import check_positive_int, check_probability
from .exceptions import DomainError, UndefinedStatisticError
from .mixing import adjusted_delta, adjusted_delta_lagged, beta

TWO_OVER_E = 2.0 / math.e


@dataclass(frozen=True)
class BoundReport:
    """A bound value and its breakdown.

    ``terms`` lists every additive contribution; ``value`` is their sum when
    ``feasible``.  ``slow_term`` collects the square-root contributions and
    ``fast_term`` the ones linear in the log factor.
    """

    name: str
    value: float
    slow_term: float
    fast_term: float
    terms: dict = field(default_factory=dict)
    delta_effective: dict = field(default_factory=dict)
    feasible: bool = True
    proxy_used: object = None
    flags: tuple = ()

    def to_dict(self):
        proxy = None
        if self.proxy_used is not None:
            proxies = self.proxy_used if isinstance(self.proxy_used, dict) else {"proxy": self.proxy_used}
            proxy = {
                k: {"kind": p.kind, "value": float(p.value), "tau": p.tau, "m": p.m}
                if hasattr(p, "kind") else float(p)
                for k, p in proxies.items()
            }
        return {
            "bound": self.name,
            "value": float(self.value),
            "terms": {k: float(v) for k, v in self.terms.items()},
            "slow_term": float(self.slow_term),
            "fast_term": float(self.fast_term),
            "delta_effective": {k: float(v) for k, v in self.delta_effective.items()},
            "feasible": bool(self.feasible),
            "flags": list(self.flags),
            "proxies": proxy,
        }


def _infeasible(name, deltas, proxy=None, flags=()):
    return BoundReport(
        name, math.inf, math.inf, math.inf, {}, deltas, False, proxy,
        tuple(flags) + ("infeasible",),
    )


def _report(name, slow, fast, deltas, proxy=None, flags=(), terms=None):
    if terms is None:
        terms = {"slow": slow, "fast": fast}
    return BoundReport(name, slow + fast, slow, fast, terms, deltas, True, proxy, tuple(flags))


def _value(proxy):
    return float(proxy.value) if hasattr(proxy, "value") else float(proxy)


def _check_c(c):
    if not c > 0:
        raise DomainError(f"the norm bound c must be positive, got {c}")


def bound_thm1(vpop, n, tau, c, delta, model):
    """Bernstein bound with the population variance surrogate.

    ``sqrt((2 tau V / n)(1 + 2 ln(2/d))) + (8 tau c / (3n)) ln(2/d)`` with
    ``d = delta(tau)``.  ``c`` bounds ``|X_t|``.
    """
    check_probability(delta)
    _check_c(c)
    d = adjusted_delta(delta, n, tau, model)
    deltas = {"delta_tau": d}
    if d <= 0:
        return _infeasible("thm1", deltas, vpop)
    L = math.log(2.0 / d)
    v = max(_value(vpop), 0.0)
    slow = math.sqrt(2.0 * tau * v / n * (1.0 + 2.0 * L))
    fast = 8.0 * tau * c / (3.0 * n) * L
    return _report("thm1", slow, fast, deltas, vpop)


def bound_thm2(vbiased, n, tau, c, delta, model):
    """Empirical Bernstein bound with the biased proxy.

    ``sqrt((2 tau V+ / n)(1 + 2 ln(4/d))) + (32 tau c / (3n)) ln(4/d)``.
    """
    check_probability(delta)
    _check_c(c)
    d = adjusted_delta(delta, n, tau, model)
    deltas = {"delta_tau": d}
    if d <= 0:
        return _infeasible("thm2", deltas, vbiased)
    L = math.log(4.0 / d)
    slow = math.sqrt(2.0 * tau * max(_value(vbiased), 0.0) / n * (1.0 + 2.0 * L))
    fast = 32.0 * tau * c / (3.0 * n) * L
    return _report("thm2", slow, fast, deltas, vbiased)


def bound_thm3(vunbiased, n, tau, c, delta, model):
    """Empirical Bernstein bound with the u-statistic proxy (stationary data).

    ``sqrt((2 tau max(V~, 0) / n)(1 + 2 ln(4/d))) + (22 tau c / n) ln(4/d)``.
    Requires ``delta < 2/e`` and at least two blocks per sequence.  A
    negative proxy is floored at zero and flagged.
    """
    check_probability(delta)
    if delta >= TWO_OVER_E:
        raise DomainError(f"the unbiased bound needs delta < 2/e, got {delta}")
    _check_c(c)
    if int(n) // (2 * int(tau)) < 2:
        raise UndefinedStatisticError("the unbiased bound needs m >= 2")
    d = adjusted_delta(delta, n, tau, model)
    deltas = {"delta_tau": d}
    v = _value(vunbiased)
    flags = ("proxy_floored",) if v < 0 else ()
    if d <= 0:
        return _infeasible("thm3", deltas, vunbiased, flags)
    L = math.log(4.0 / d)
    slow = math.sqrt(2.0 * tau * max(v, 0.0) / n * (1.0 + 2.0 * L))
    fast = 22.0 * tau * c / n * L
    return _report("thm3", slow, fast, deltas, vunbiased, flags)


def bound_iid_biased(sum_sq_norms, m, c, delta):
    """Unnormalized i.i.d. bound on ``|sum_i (X_i - E X_i)|`` with uncentered norms.

    ``sqrt(sum |X_i|^2) (1 + sqrt(2 ln(2/delta))) + (16 c / 3) ln(2/delta)``.
    """
    check_probability(delta)
    check_positive_int(m, "m")
    L = math.log(2.0 / delta)
    slow = math.sqrt(max(sum_sq_norms, 0.0)) * (1.0 + math.sqrt(2.0 * L))
    fast = 16.0 * c / 3.0 * L
    return _report("iid_biased", slow, fast, {"delta": delta})


def bound_iid_unbiased(pairwise_sq_distance_sum, m, c, delta):
    """Unnormalized i.i.d. bound with the pairwise-distance variance estimate.

    ``sqrt(sum_{i != j} |X_i - X_j|^2 / (2(m-1))) (1 + sqrt(2 ln(2/delta))) + 11 c ln(2/delta)``,
    where the sum runs over ordered pairs.
    """
    check_probability(delta)
    if delta >= TWO_OVER_E:
        raise DomainError(f"the unbiased i.i.d. bound needs delta < 2/e, got {delta}")
    check_positive_int(m, "m", minimum=2)
    L = math.log(2.0 / delta)
    slow = math.sqrt(max(pairwise_sq_distance_sum, 0.0) / (2.0 * (m - 1))) * (1.0 + math.sqrt(2.0 * L))
    fast = 11.0 * c * L
    return _report("iid_unbiased", slow, fast, {"delta": delta})


def bound_cov_ps(n, tau, c_H, delta, model):
    """Blocked Pinelis-Sakhanenko bound on ``|C_hat - C|_HS``.

    ``(4 c_H / m) ln(4/d) + (2 c_H / sqrt(m)) ln(4/d)`` with ``m = n // (2 tau)``.
    """
    check_probability(delta)
    m = int(n) // (2 * int(tau))
    d = adjusted_delta(delta, n, tau, model)
    deltas = {"delta_tau": d}
    if d <= 0:
        return _infeasible("cov_ps", deltas)
    L = math.log(4.0 / d)
    fast = 4.0 * c_H / m * L
    slow = 2.0 * c_H / math.sqrt(m) * L
    return _report("cov_ps", slow, fast, deltas)


def bound_cov_bernstein(n, tau, c_H, delta, model):
    """Worst-case blocked Bernstein bound on ``|C_hat - C|_HS``.

    ``(4 c_H / (3m)) ln(2/d) + sqrt((2 c_H^2 / m)(1 + 2 ln(2/d)))``.
    """
    check_probability(delta)
    m = int(n) // (2 * int(tau))
    d = adjusted_delta(delta, n, tau, model)
    deltas = {"delta_tau": d}
    if d <= 0:
        return _infeasible("cov_bernstein", deltas)
    L = math.log(2.0 / d)
    fast = 4.0 * c_H / (3.0 * m) * L
    slow = math.sqrt(2.0 * c_H**2 / m * (1.0 + 2.0 * L))
    return _report("cov_bernstein", slow, fast, deltas)


def risk_bound_ivanov(gamma, r, c_H, n, tau, delta, model, vY, vZ, vW):
    """Uniform risk deviation bound over rank-``r`` operators with ``|G|_HS <= gamma``.

    Six terms; the lagged probability ``delta'(tau)`` enters the
    cross-covariance terms.
    """
    check_probability(delta)
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")
    check_positive_int(r, "r")
    m = int(n) // (2 * int(tau))
    if m < 2:
        raise UndefinedStatisticError("the risk bound needs m >= 2")
    d = adjusted_delta(delta, n, tau, model)
    dl = adjusted_delta_lagged(delta, n, tau, model)
    deltas = {"delta_tau": d, "delta_tau_lagged": dl}
    proxies = {"vY": vY, "vZ": vZ, "vW": vW}
    if d <= 0 or dl <= 0:
        return _infeasible("ivanov", deltas, proxies)
    L = math.log(12.0 / d)
    Ll = math.log(12.0 / dl)
    y, z, w = (max(_value(v), 0.0) for v in (vY, vZ, vW))
    terms = {
        "cov_fast": 32.0 * gamma**2 * c_H * tau / (3.0 * n) * L,
        "crosscov_fast": 64.0 * math.sqrt(r) * gamma * c_H * tau / (3.0 * n) * Ll,
        "trace_fast": 7.0 * c_H * tau / (3.0 * (n / (2.0 * tau) - 1.0)) * L,
        "cov_slow": math.sqrt(2.0 * gamma**4 * y * tau / n * (1.0 + 2.0 * L)),
        "crosscov_slow": math.sqrt(2.0 * r * gamma**2 * z * tau / n * (1.0 + 2.0 * Ll)),
        "trace_slow": math.sqrt(2.0 * w * tau / n * L),
    }
    slow = terms["cov_slow"] + terms["crosscov_slow"] + terms["trace_slow"]
    fast = terms["cov_fast"] + terms["crosscov_fast"] + terms["trace_fast"]
    return BoundReport("ivanov", sum(terms.values()), slow, fast, terms, deltas, True, proxies)


def tikhonov_delta(delta, g_hs_norm, n, tau, model):
    """``0.5 delta / |G|_HS - 2 (m - 1) beta(tau)``."""
    m = int(n) // (2 * int(tau))
    return 0.5 * delta / g_hs_norm - 2.0 * (m - 1) * beta(model, tau)


def risk_bound_tikhonov(g_hs_norm, r, c_H, n, tau, delta, model, vY, vZ, vW):
    """Risk deviation bound for a fitted reduced-rank Tikhonov estimator.

    Evaluated a posteriori at the fitted HS norm ``g >= 1``; the failure
    probability is replaced by ``0.5 delta / g - 2 (m-1) beta(tau)``.
    """
    check_probability(delta)
    check_positive_int(r, "r")
    g = float(g_hs_norm)
    if g < 1.0:
        raise DomainError(f"the Tikhonov risk bound needs |G|_HS >= 1, got {g}")
    m = int(n) // (2 * int(tau))
    if m < 2:
        raise UndefinedStatisticError("the risk bound needs m >= 2")
    d = tikhonov_delta(delta, g, n, tau, model)
    deltas = {"delta_hat": d}
    proxies = {"vY": vY, "vZ": vZ, "vW": vW}
    if d <= 0:
        return _infeasible("tikhonov", deltas, proxies)
    L = math.log(12.0 / d)
    y, z, w = (max(_value(v), 0.0) for v in (vY, vZ, vW))
    terms = {
        "operator_fast": 128.0 * c_H * tau * g * (math.sqrt(r) + g) / (3.0 * n) * L,
        "trace_fast": 14.0 * c_H * tau**2 / (3.0 * n - 2.0 * tau) * L,
        "cov_slow": math.sqrt(32.0 * g**4 * y * tau / n * (1.0 + 2.0 * L)),
        "trace_slow": math.sqrt(2.0 * w * tau / n * L),
        "crosscov_slow": math.sqrt(8.0 * r * g**2 * z * tau / n * (1.0 + 2.0 * L)),
    }
    slow = terms["cov_slow"] + terms["trace_slow"] + terms["crosscov_slow"]
    fast = terms["operator_fast"] + terms["trace_fast"]
    return BoundReport("tikhonov", sum(terms.values()), slow, fast, terms, deltas, True, proxies)
