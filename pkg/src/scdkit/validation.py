"""Input validation helpers shared across estimators and metric functions."""

from __future__ import annotations

from typing import Any

import numpy as np


def check_matrix(X: Any, *, min_rows: int = 1, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array of finite values.

    Raises ValueError on wrong rank, too few rows, or non-finite entries.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one column")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def as_rows(data: Any, *, min_rows: int = 1, name: str = "X") -> np.ndarray:
    """Accept an EmbeddingStore or array-like; return a validated float64 matrix."""
    matrix = getattr(data, "matrix", data)
    return check_matrix(matrix, min_rows=min_rows, name=name)


def check_vector(v: Any, *, name: str = "v") -> np.ndarray:
    """Coerce to a 1-D float64 array of finite values."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_probabilities(p: Any, *, name: str = "p", atol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector: non-negative entries summing to 1 within atol."""
    arr = check_vector(p, name=name)
    if (arr < 0).any():
        raise ValueError(f"{name} has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, expected 1 within {atol}")
    return arr


def check_indices(indices: Any, *, upper: int, name: str = "indices") -> np.ndarray:
    """Validate row indices: integer, strictly increasing, within [0, upper)."""
    arr = np.asarray(indices, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional")
    if arr.size:
        if arr[0] < 0 or arr[-1] >= upper:
            raise ValueError(f"{name} out of range [0, {upper})")
        if arr.size > 1 and not (np.diff(arr) > 0).all():
            raise ValueError(f"{name} must be strictly increasing")
    return arr
