"""Input validation helpers shared by the estimator-style analytic classes."""

from __future__ import annotations

import numpy as np


def check_embedding_matrix(X, *, min_rows: int = 0) -> np.ndarray:
    """Coerce X to a finite 2-D float64 array, rejecting anything else."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding matrix contains non-finite values")
    return arr


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
