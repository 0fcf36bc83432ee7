"""Input validation helpers shared across the package."""
from __future__ import annotations

import numpy as np


def as_float_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array (always a fresh copy)."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_float_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (always a fresh copy)."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_unit_vector(values, name: str = "vector", atol: float = 1e-6) -> np.ndarray:
    arr = as_float_vector(values, name)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > atol:
        raise ValueError(f"{name} must be unit-norm within {atol}, got norm {norm!r}")
    return arr


def as_unit_matrix(values, name: str = "embeddings", atol: float = 1e-6) -> np.ndarray:
    arr = as_float_matrix(values, name)
    if arr.shape[0]:
        norms = np.linalg.norm(arr, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > atol:
            raise ValueError(f"rows of {name} must be unit-norm within {atol} "
                             f"(worst deviation {worst!r})")
    return arr


def check_open_unit(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {value!r}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (value > 0.0) or not np.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def readonly(arr: np.ndarray) -> np.ndarray:
    """Mark an owned array immutable so frozen records stay value-like."""
    arr.flags.writeable = False
    return arr
