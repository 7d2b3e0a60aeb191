"""beta-mixing coefficient models and mixing-adjusted failure probabilities."""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleScheduleError

VARIANTS = ("none", "exponential", "algebraic", "table")


@dataclass(frozen=True)
class MixingModel:
    """Decay model for the beta-mixing coefficients ``beta(tau)``.

    Use the constructors :meth:`none`, :meth:`exponential`,
    :meth:`algebraic` and :meth:`table` rather than the raw initializer.
    """

    variant: str = "none"
    rate: float = 0.0
    taus: tuple = ()
    betas: tuple = ()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown mixing variant {self.variant!r}")
        if self.variant in ("exponential", "algebraic") and not self.rate > 0:
            raise ValueError(f"{self.variant} mixing needs a positive rate, got {self.rate}")
        if self.variant == "table":
            taus = np.asarray(self.taus, dtype=float)
            betas = np.asarray(self.betas, dtype=float)
            if taus.size == 0 or taus.shape != betas.shape:
                raise ValueError("table mixing needs matching non-empty tau and beta lists")
            if np.any(np.diff(taus) <= 0):
                raise ValueError("table lags must be strictly increasing")
            if np.any(betas < 0) or np.any(betas > 1):
                raise ValueError("tabulated beta values must lie in [0, 1]")
            if np.any(np.diff(betas) > 0):
                raise ValueError("tabulated beta values must be non-increasing in tau")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", float(rate))

    @classmethod
    def algebraic(cls, exponent):
        return cls("algebraic", float(exponent))

    @classmethod
    def table(cls, taus, betas):
        return cls("table", 0.0, tuple(float(t) for t in taus), tuple(float(b) for b in betas))

    @classmethod
    def from_csv(cls, path):
        """Read a two-column ``tau,beta`` CSV (``#`` comments and a header allowed)."""
        taus, betas = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    t, b = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                taus.append(t)
                betas.append(b)
        return cls.table(taus, betas)

    @classmethod
    def parse(cls, spec):
        """Parse ``none``, ``exponential:<p>``, ``algebraic:<p>`` or ``table:<path>``."""
        spec = spec.strip()
        if spec == "none":
            return cls.none()
        kind, _, arg = spec.partition(":")
        if not arg:
            raise ValueError(f"mixing spec {spec!r} is missing its argument")
        if kind == "exponential":
            return cls.exponential(float(arg))
        if kind == "algebraic":
            return cls.algebraic(float(arg))
        if kind == "table":
            return cls.from_csv(arg)
        raise ValueError(f"unknown mixing spec {spec!r}")

    def to_spec(self):
        if self.variant in ("exponential", "algebraic"):
            return f"{self.variant}:{self.rate!r}"
        return self.variant

    def __call__(self, tau):
        return beta(self, tau)


def beta(model, tau):
    """Mixing coefficient ``beta(tau)`` clamped to ``[0, 1]``.

    The table variant is a step function holding the last tabulated value at
    or below ``tau``; lags below the first entry are rejected.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if model.variant == "none":
        return 0.0
    if model.variant == "exponential":
        value = math.exp(-model.rate * tau)
    elif model.variant == "algebraic":
        value = float(tau) ** (-model.rate)
    else:
        if tau < model.taus[0]:
            raise ValueError(
                f"tau={tau} is below the smallest tabulated lag {model.taus[0]}"
            )
        idx = int(np.searchsorted(model.taus, tau, side="right")) - 1
        value = model.betas[idx]
    return min(max(value, 0.0), 1.0)


def adjusted_delta(delta, n, tau, model):
    """``delta(tau) = delta - 2 (m - 1) beta(tau)`` with ``m = n // (2 tau)``.

    The result may be non-positive; callers decide what that means.
    """
    _check_delta(delta)
    m = int(n) // (2 * int(tau))
    return delta - 2.0 * (m - 1) * beta(model, tau)


def adjusted_delta_lagged(delta, n, tau, model):
    """``delta'(tau) = delta - 2 (m - 1) beta(tau - 1)``, used for lagged pairs."""
    _check_delta(delta)
    if tau < 2:
        raise InfeasibleScheduleError("lagged pairs need tau >= 2")
    m = int(n) // (2 * int(tau))
    return delta - 2.0 * (m - 1) * beta(model, tau - 1)


@dataclass(frozen=True)
class TauSearch:
    """Outcome of :func:`min_feasible_tau`.

    ``tau`` is ``None`` when nothing up to ``n // 2`` is feasible; ``best_delta``
    then holds the largest adjusted probability that was seen and
    ``best_tau`` where it occurred.
    """

    tau: object
    delta_tau: float
    best_delta: float
    best_tau: int

    @property
    def feasible(self):
        return self.tau is not None


def min_feasible_tau(delta, n, model, require_lagged=False):
    """Smallest block length with a positive adjusted failure probability.

    With ``require_lagged`` the lagged probability ``delta'(tau)`` must be
    positive as well (this rules out ``tau = 1``).
    """
    _check_delta(delta)
    best_delta, best_tau = -math.inf, 1
    for tau in range(1, int(n) // 2 + 1):
        d = adjusted_delta(delta, n, tau, model)
        if require_lagged:
            d = min(d, adjusted_delta_lagged(delta, n, tau, model)) if tau >= 2 else -math.inf
        if d > best_delta:
            best_delta, best_tau = d, tau
        if d > 0:
            return TauSearch(tau, d, d, tau)
    return TauSearch(None, best_delta, best_delta, best_tau)


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
