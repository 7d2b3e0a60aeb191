"""Kernels, Gram matrices and the operator Gram transforms.

For rank-one operators ``Y_t = phi(x_t) (x) phi(x_t)`` the Hilbert-Schmidt
inner product is ``<Y_t, Y_s>_HS = k(x_t, x_s)^2``; for the lagged operators
``Z_t = phi(x_t) (x) phi(x_{t+1})`` it is ``k(x_t, x_s) k(x_{t+1}, x_{s+1})``.
Both Grams therefore follow from the base kernel matrix.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import as_points
from .exceptions import DimensionError, KindError

KINDS = ("base", "squared", "lag_product")


class GaussianKernel:
    """``k(x, y) = exp(-|x - y|^2 / (2 l^2))``."""

    name = "gaussian"

    def __init__(self, length_scale=1.0):
        if not length_scale > 0:
            raise ValueError(f"length_scale must be positive, got {length_scale}")
        self.length_scale = float(length_scale)

    def __call__(self, X, Y=None):
        X = as_points(X)
        Y = X if Y is None else as_points(Y)
        d2 = cdist(X, Y, "sqeuclidean")
        return np.exp(-d2 / (2.0 * self.length_scale**2))

    def diag(self, X):
        return np.ones(as_points(X).shape[0])

    def squared(self, X, Y=None):
        """Entrywise square of the kernel matrix, without forming it first."""
        X = as_points(X)
        Y = X if Y is None else as_points(Y)
        return np.exp(-cdist(X, Y, "sqeuclidean") / self.length_scale**2)

    def __repr__(self):
        return f"GaussianKernel(length_scale={self.length_scale!r})"


class LinearKernel:
    """``k(x, y) = <x, y>``."""

    name = "linear"

    def __call__(self, X, Y=None):
        X = as_points(X)
        Y = X if Y is None else as_points(Y)
        return X @ Y.T

    def diag(self, X):
        X = as_points(X)
        return np.einsum("ij,ij->i", X, X)

    def squared(self, X, Y=None):
        return self(X, Y) ** 2

    def __repr__(self):
        return "LinearKernel()"


def make_kernel(name, length_scale=1.0):
    if name == "gaussian":
        return GaussianKernel(length_scale)
    if name == "linear":
        return LinearKernel()
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric matrix of Hilbert-space inner products.

    ``c_bound`` is the almost-sure bound on the norm of the vectors whose
    inner products fill the matrix: ``|phi(x)|`` for ``base``,
    ``|phi(x)|^2`` for ``squared`` and ``|phi(x_t)| |phi(x_{t+1})|`` for
    ``lag_product``.
    """

    entries: np.ndarray
    kind: str = "base"
    c_bound: float = 1.0

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("Gram matrix has non-finite entries")
        if self.kind not in KINDS:
            raise KindError(f"unknown Gram kind {self.kind!r}")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "c_bound", float(self.c_bound))

    @property
    def n(self):
        return self.entries.shape[0]

    @classmethod
    def from_array(cls, entries, kind="base", c_bound=None):
        """Wrap an externally computed matrix; ``c_bound`` defaults from the diagonal."""
        entries = np.asarray(entries, dtype=float)
        if c_bound is None:
            dmax = float(np.max(np.diag(entries))) if entries.size else 0.0
            c_bound = dmax if kind == "squared" else np.sqrt(max(dmax, 0.0))
        return cls(entries, kind, c_bound)


def gram(kernel, points):
    """Base Gram matrix ``K[t, s] = k(x_t, x_s)``."""
    X = as_points(points)
    if X.shape[0] < 1:
        raise DimensionError("need at least one point")
    K = kernel(X)
    K = 0.5 * (K + K.T)
    c = float(np.sqrt(np.max(kernel.diag(X))))
    return GramMatrix(K, "base", c)


def covariance_operator_gram(base):
    """Gram of ``phi(x_t) (x) phi(x_t)`` in the HS inner product (entrywise square)."""
    if base.kind != "base":
        raise KindError(f"expected a base Gram matrix, got {base.kind!r}")
    return GramMatrix(base.entries**2, "squared", base.c_bound**2)


def crosscov_operator_gram(base):
    """Gram of ``phi(x_t) (x) phi(x_{t+1})`` for ``t = 1..n`` from ``n + 1`` points."""
    if base.kind != "base":
        raise KindError(f"expected a base Gram matrix, got {base.kind!r}")
    if base.n < 2:
        raise DimensionError("lag-product Gram needs at least two points")
    K = base.entries
    entries = K[:-1, :-1] * K[1:, 1:]
    d = np.clip(np.diag(K), 0.0, None)
    c = float(np.sqrt(np.max(d[:-1] * d[1:])))
    return GramMatrix(entries, "lag_product", c)


def save_gram_csv(gram_matrix, path):
    """Dense row-major CSV with a ``# kind,n,c_bound`` header."""
    with open(path, "w") as fh:
        fh.write("# kind,n,c_bound\n")
        fh.write(f"# {gram_matrix.kind},{gram_matrix.n},{gram_matrix.c_bound:.17g}\n")
        for row in gram_matrix.entries:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def load_gram_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing '# kind,n,c_bound' header")
    kind, n, c_bound = (v.strip() for v in lines[1].lstrip("# ").split(","))
    rows = [[float(v) for v in line.split(",")] for line in lines[2:] if line.strip()]
    entries = np.array(rows, dtype=float).reshape(-1, int(n)) if rows else np.zeros((0, 0))
    if entries.shape != (int(n), int(n)):
        raise DimensionError(f"{path}: expected {n}x{n} entries, got {entries.shape}")
    return GramMatrix(entries, kind, float(c_bound))
