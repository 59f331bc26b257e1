"""Input validation helpers shared across modules."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import BadInput, DimensionTooLow

__all__ = [
    "check_dimension",
    "check_positive_int",
    "check_positive_real",
    "check_points",
    "check_field_matrix",
]


def check_dimension(n, minimum: int = 5) -> int:
    """Return ``n`` as an int, raising DimensionTooLow below ``minimum``."""
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise BadInput(f"dimension must be an integer, got {n!r}")
    n = int(n)
    if n < minimum:
        raise DimensionTooLow(f"n = {n} < {minimum}")
    return n


def check_positive_int(value, name: str = "value") -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise BadInput(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_positive_real(value, name: str = "value") -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise BadInput(f"{name} must be a real number, got {value!r}") from exc
    if not np.isfinite(v) or v <= 0:
        raise BadInput(f"{name} must be positive and finite, got {value!r}")
    return v


def check_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce chart points to a finite float array of shape (m, dim).

    A single point given as a 1-D array is promoted to shape (1, dim).
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise BadInput(f"points must be 1-D or 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise BadInput(f"points must have {dim} coordinates, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise BadInput("points must be finite")
    return arr


def check_field_matrix(X, n_features: int) -> np.ndarray:
    """sklearn-style check for a 2-D matrix of fields with fixed width."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != n_features:
        raise BadInput(f"expected {n_features} columns, got {X.shape[1]}")
    return X
