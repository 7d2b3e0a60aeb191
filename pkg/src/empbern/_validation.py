import numbers

import numpy as np
from sklearn.utils import check_array


def as_points(X):
    """Return sample points as a finite 2-D float array of shape (n, d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1)
    return check_array(X, ensure_min_samples=0, ensure_all_finite=True)


def check_probability(delta, upper=1.0, name="delta"):
    if not isinstance(delta, numbers.Real) or not 0 < delta < upper:
        raise ValueError(f"{name} must lie in (0, {upper:g}), got {delta!r}")
    return float(delta)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
