"""Finite-dimensional operator regression with reduced-rank Tikhonov estimators.

Features are rows: ``phi0[t] = phi(x_t)`` and ``phi1[t] = phi(x_t^+)``.  An
operator ``G`` acts through its adjoint, so the one-step prediction of
``phi(x^+)`` is ``G.T @ phi(x)`` (``phi0 @ G`` for a batch of rows).
"""
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._validation import as_points, check_positive_int
from .blocks import build_schedule
from .bounds import risk_bound_tikhonov, tikhonov_delta
from .correlations import corr_biased, scalar_block_variance
from .exceptions import AllInfeasibleError, DimensionError, DomainError, UndefinedStatisticError
from .kernels import GramMatrix, crosscov_operator_gram
from .mixing import MixingModel


@dataclass(frozen=True)
class FeatureData:
    phi0: np.ndarray
    phi1: np.ndarray
    c_H: float = None

    def __post_init__(self):
        phi0 = np.atleast_2d(np.asarray(self.phi0, dtype=float))
        phi1 = np.atleast_2d(np.asarray(self.phi1, dtype=float))
        if phi0.shape != phi1.shape:
            raise DimensionError(f"phi0 {phi0.shape} and phi1 {phi1.shape} differ in shape")
        if not (np.all(np.isfinite(phi0)) and np.all(np.isfinite(phi1))):
            raise ValueError("features must be finite")
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "phi1", phi1)
        observed = float(max(np.max(np.sum(phi0**2, axis=1)), np.max(np.sum(phi1**2, axis=1))))
        if self.c_H is None:
            object.__setattr__(self, "c_H", observed)
        elif observed > self.c_H * (1 + 1e-12):
            raise ValueError(f"feature squared norm {observed} exceeds c_H={self.c_H}")

    @property
    def n(self):
        return self.phi0.shape[0]

    @property
    def d(self):
        return self.phi0.shape[1]

    @classmethod
    def from_trajectory_features(cls, phi, c_H=None):
        """Consecutive pairs ``(phi[t], phi[t+1])`` of a featurized trajectory."""
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        return cls(phi[:-1], phi[1:], c_H)


def assemble_covariances(data):
    """Empirical input, cross and output covariances ``(C_hat, T_hat, D_hat)``."""
    n = data.n
    C = data.phi0.T @ data.phi0 / n
    T = data.phi0.T @ data.phi1 / n
    D = data.phi1.T @ data.phi1 / n
    return 0.5 * (C + C.T), T, 0.5 * (D + D.T)


@dataclass(frozen=True)
class OperatorModel:
    G: np.ndarray
    Chat: np.ndarray
    That: np.ndarray
    Dhat: np.ndarray
    gamma: float
    r: int
    hs_norm: float
    rank_actual: int
    tie_at_cut: bool = False


def _inv_sqrt_regularized(C, gamma):
    w, V = np.linalg.eigh(0.5 * (C + C.T) + gamma * np.eye(C.shape[0]))
    # eigenvalues of C + gamma I are >= gamma analytically
    w = np.maximum(w, gamma)
    return (V / np.sqrt(w)) @ V.T, (V * np.sqrt(w)) @ V.T


def fit_rrr(Chat, That, gamma, r, Dhat=None):
    """Reduced-rank regression ``G = C_g^{-1/2} [[C_g^{-1/2} T]]_r``.

    ``C_g = C_hat + gamma I`` and ``[[.]]_r`` is the rank-``r`` truncated SVD.
    """
    Chat = np.atleast_2d(np.asarray(Chat, dtype=float))
    That = np.atleast_2d(np.asarray(That, dtype=float))
    d = Chat.shape[0]
    if Chat.shape != (d, d) or That.shape != (d, d):
        raise DimensionError("C_hat and T_hat must be square of the same size")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    r = check_positive_int(r, "r")
    if r > d:
        raise ValueError(f"rank r={r} exceeds feature dimension d={d}")
    inv_sqrt, _ = _inv_sqrt_regularized(Chat, gamma)
    M = inv_sqrt @ That
    U, s, Vt = np.linalg.svd(M)
    tie = bool(r < d and s[r - 1] > 0 and math.isclose(s[r - 1], s[r], rel_tol=1e-12))
    M_r = (U[:, :r] * s[:r]) @ Vt[:r]
    G = inv_sqrt @ M_r
    sv = np.linalg.svd(G, compute_uv=False)
    rank_actual = int(np.sum(sv > 1e-8 * sv[0])) if sv[0] > 0 else 0
    return OperatorModel(
        G, Chat, That, Dhat, float(gamma), r, float(np.linalg.norm(G, "fro")), rank_actual, tie
    )


def empirical_risk(model, data):
    """Empirical risk as ``(direct, trace)``.

    direct: ``mean_t |phi(x_t^+) - G^* phi(x_t)|^2``;
    trace: ``tr(D) + tr(G G^* C) - 2 tr(G^* T)``.
    """
    G = model.G if hasattr(model, "G") else np.atleast_2d(np.asarray(model, dtype=float))
    if G.shape != (data.d, data.d):
        raise DimensionError(f"operator shape {G.shape} does not match d={data.d}")
    resid = data.phi1 - data.phi0 @ G
    direct = float(np.mean(np.sum(resid**2, axis=1)))
    C, T, D = assemble_covariances(data)
    trace = float(np.trace(D) + np.trace(G @ G.T @ C) - 2.0 * np.trace(G.T @ T))
    return direct, trace


def forecast(model, x_features, steps):
    """Iterate ``v <- G^* v`` ``steps`` times; returns the ``steps`` iterates."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    G = model.G if hasattr(model, "G") else np.asarray(model, dtype=float)
    v = np.asarray(x_features, dtype=float)
    out = []
    for _ in range(int(steps)):
        v = G.T @ v
        out.append(v)
    return np.array(out).reshape(int(steps), v.size)


class GaussianGridFeatures(TransformerMixin, BaseEstimator):
    """Gaussian bumps on a regular grid of centers, optionally normalized.

    With ``normalize=True`` every feature vector has unit norm, so the
    feature map is bounded by ``c_H = 1``.
    """

    def __init__(self, length_scale=1.0, n_centers=16, normalize=True):
        self.length_scale = length_scale
        self.n_centers = n_centers
        self.normalize = normalize

    def fit(self, X, y=None):
        X = validate_data(self, as_points(X), reset=True)
        lo, hi = X.min(axis=0), X.max(axis=0)
        grids = [np.linspace(a, b, self.n_centers) for a, b in zip(lo, hi)]
        self.centers_ = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, X.shape[1])
        if self.normalize:
            self.norm_bound_ = 1.0
        else:
            # each bump is at most 1
            self.norm_bound_ = float(self.centers_.shape[0])
        return self

    def transform(self, X):
        check_is_fitted(self, "centers_")
        X = validate_data(self, as_points(X), reset=False)
        d2 = ((X[:, None, :] - self.centers_[None, :, :]) ** 2).sum(axis=-1)
        phi = np.exp(-d2 / (2.0 * self.length_scale**2))
        if self.normalize:
            norms = np.linalg.norm(phi, axis=1, keepdims=True)
            phi = phi / np.maximum(norms, np.finfo(float).tiny)
        return phi


class ReducedRankRegressor(RegressorMixin, BaseEstimator):
    """Reduced-rank Tikhonov operator regression in explicit feature space.

    ``fit(X, Y)`` takes input features ``X = phi(x_t)`` and output features
    ``Y = phi(x_t^+)``; ``predict`` returns ``X @ G``.
    """

    def __init__(self, gamma=1e-6, rank=1):
        self.gamma = gamma
        self.rank = rank

    def fit(self, X, Y):
        X, Y = validate_data(self, X, Y, multi_output=True, y_numeric=True)
        Y = Y.reshape(X.shape[0], -1)
        data = FeatureData(X, Y, c_H=np.inf)
        C, T, D = assemble_covariances(data)
        self.model_ = fit_rrr(C, T, self.gamma, self.rank, Dhat=D)
        self.G_ = self.model_.G
        self.hs_norm_ = self.model_.hs_norm
        return self

    def predict(self, X):
        check_is_fitted(self, "G_")
        X = validate_data(self, X, reset=False)
        return X @ self.G_

    def risk(self, X, Y):
        """Empirical risk (direct form) on ``(X, Y)``."""
        check_is_fitted(self, "G_")
        return empirical_risk(self.model_, FeatureData(X, Y, c_H=np.inf))[0]

    def forecast(self, x_features, steps):
        check_is_fitted(self, "G_")
        return forecast(self.model_, x_features, steps)


@dataclass
class ModelSelection:
    table: list
    best: dict


def _risk_proxies(phi, schedule):
    """Biased proxies of the covariance and lag-product Grams and the block variance of W."""
    base = GramMatrix(phi @ phi.T, "base", 1.0)
    n = phi.shape[0] - 1
    vY = corr_biased(base.entries[:n, :n] ** 2, schedule)
    vZ = corr_biased(crosscov_operator_gram(base), schedule)
    # W_t = |phi(x_t^+)|^2, the outputs whose trace the risk contains
    W = np.sum(phi[1:] ** 2, axis=1)
    vW = scalar_block_variance(W, schedule)
    return vY, vZ, vW


def _tikhonov_tau(delta, g, n, model):
    for tau in range(1, n // 4 + 1):
        if tikhonov_delta(delta, g, n, tau, model) > 0:
            return tau
    return None


def model_select(
    states,
    grid,
    delta=0.05,
    tau=None,
    mixing=None,
    train_fraction=0.75,
    n_centers=16,
    proxies_on="train",
    holdout_rmse=True,
):
    """Rank reduced-rank estimators by the Tikhonov risk bound.

    ``grid`` is a sequence of dicts with keys ``length_scale``, ``gamma`` and
    ``rank``.  Each config is fitted on a contiguous training prefix of the
    trajectory ``states``; the bound proxies come from the training pairs
    (``proxies_on="train"``) or all pairs (``"all"``).  With ``tau=None`` the
    smallest block length making the bound feasible is chosen per config.
    Infeasible configs rank last.  Raises :class:`AllInfeasibleError` when no
    config is feasible.
    """
    if not grid:
        raise ValueError("grid must not be empty")
    if proxies_on not in ("train", "all"):
        raise ValueError("proxies_on must be 'train' or 'all'")
    mixing = MixingModel.none() if mixing is None else mixing
    x = as_points(states)
    n_train = int(round(train_fraction * (x.shape[0] - 1)))
    if n_train < 4 or n_train >= x.shape[0] - 1:
        raise ValueError("train_fraction leaves no usable training or validation pairs")
    x_train, x_valid = x[: n_train + 1], x[n_train:]

    rows = []
    for idx, cfg in enumerate(grid):
        feats = GaussianGridFeatures(cfg["length_scale"], n_centers=cfg.get("n_centers", n_centers))
        feats.fit(x_train)
        phi_train = feats.transform(x_train)
        est = ReducedRankRegressor(gamma=cfg["gamma"], rank=cfg["rank"]).fit(phi_train[:-1], phi_train[1:])
        g = est.hs_norm_
        phi_proxy = phi_train if proxies_on == "train" else feats.transform(x)
        n_pairs = phi_proxy.shape[0] - 1
        c_H = feats.norm_bound_
        row = {"config": idx, **cfg, "hs_norm": g, "rank_actual": est.model_.rank_actual}
        t = tau if tau is not None else _tikhonov_tau(delta, max(g, 1.0), n_pairs, mixing)
        row["tau"] = t
        report = None
        reason = ""
        if g < 1.0:
            reason = "hs_norm_below_1"
        elif t is None:
            reason = "no_feasible_tau"
        else:
            try:
                schedule = build_schedule(n_pairs, t)
                vY, vZ, vW = _risk_proxies(phi_proxy[: schedule.n_effective + 1], schedule)
                report = risk_bound_tikhonov(
                    g, cfg["rank"], c_H, schedule.n_effective, t, delta, mixing, vY, vZ, vW
                )
                row.update(vY=vY.value, vZ=vZ.value, vW=vW.value)
                if not report.feasible:
                    reason = "delta_hat_nonpositive"
            except (UndefinedStatisticError, ValueError) as exc:
                reason = str(exc)
        row["feasible"] = bool(report is not None and report.feasible)
        row["bound"] = report.value if report is not None else math.inf
        row["reason"] = reason
        if report is not None:
            row.update({f"term_{k}": v for k, v in report.terms.items()})
            row.update(report.delta_effective)
        row["train_risk"] = est.risk(phi_train[:-1], phi_train[1:])
        if holdout_rmse:
            row["holdout_rmse"] = _holdout_rmse(feats, est, x_train, x_valid)
        rows.append(row)

    rows.sort(key=lambda r: (not r["feasible"], r["bound"], r["config"]))
    for rank, r in enumerate(rows, start=1):
        r["rank_by_bound"] = rank
    if not rows[0]["feasible"]:
        raise AllInfeasibleError("every configuration produced an infeasible bound", rows)
    return ModelSelection(rows, rows[0])


def _holdout_rmse(feats, est, x_train, x_valid):
    """One-step state forecast RMSE on the validation segment.

    States are decoded from features with a least-squares linear read-out
    fitted on the training segment.
    """
    phi_train = feats.transform(x_train)
    readout, *_ = np.linalg.lstsq(phi_train, x_train, rcond=None)
    phi_valid = feats.transform(x_valid[:-1])
    pred = est.predict(phi_valid) @ readout
    return float(np.sqrt(np.mean((pred - x_valid[1:]) ** 2)))
