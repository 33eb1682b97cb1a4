"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_float_matrix(a, name="array"):
    """Coerce to a 2-d float64 array with finite entries."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return a


def as_float_vector(a, name="array", allow_inf=False):
    """Coerce to a 1-d float64 array."""
    a = np.asarray(a, dtype=float).ravel()
    if not allow_inf and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite values")
    if allow_inf and np.any(np.isnan(a)):
        raise ValueError(f"{name} contains NaN values")
    return a


def check_consistent_rows(X, Y, x_name="X", y_name="Y"):
    if X.shape[0] != Y.shape[0]:
        raise ValueError(
            f"{x_name} and {y_name} must have the same number of rows: "
            f"{X.shape[0]} != {Y.shape[0]}"
        )
