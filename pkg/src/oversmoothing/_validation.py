"""Input checks for the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .grid import Grid


def check_nodal_rows(X, n: int | None = None) -> np.ndarray:
    """2-D float array of nodal values, one grid function per row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    X = check_array(X, dtype=float, ensure_2d=True, ensure_min_features=2)
    if n is not None and X.shape[1] != n + 1:
        raise ValueError(f"expected {n + 1} nodal values per row, got {X.shape[1]}")
    return X


def grid_for(X: np.ndarray) -> Grid:
    return Grid(X.shape[1] - 1)


def check_positive(name: str, value, allow_inf: bool = False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if np.isnan(value) or value <= 0 or (np.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_order(value) -> float:
    value = check_positive("order", value)
    if value > 1:
        raise ValueError(f"order must lie in (0, 1], got {value}")
    return value
