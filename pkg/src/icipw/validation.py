"""Input-validation helpers shared by the estimator API and the file loaders."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def as_float_vector(name: str, values, *, require_finite: bool = True) -> np.ndarray:
    """Coerce to a 1-d float64 array, optionally rejecting NaN/Inf entries."""
    arr = np.ascontiguousarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if require_finite and arr.size and not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"{name} contains a non-finite value at index {bad}")
    return arr


def as_int_vector(name: str, values) -> np.ndarray:
    """Coerce to a 1-d int64 array, rejecting non-integer entries."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        flt = np.asarray(arr, dtype=float)
        if not np.all(np.isfinite(flt)) or np.any(flt != np.round(flt)):
            raise ValidationError(f"{name} must contain integers")
        arr = flt
    return np.ascontiguousarray(arr, dtype=np.int64)


def check_same_length(**named_arrays) -> int:
    """Assert all named arrays share one length; return it."""
    items = list(named_arrays.items())
    n = len(items[0][1])
    for name, arr in items[1:]:
        if len(arr) != n:
            raise ValidationError(
                f"{name} has length {len(arr)}, expected {n} to match {items[0][0]}"
            )
    return n


def check_unit_interval(name: str, arr: np.ndarray) -> None:
    """Reject values outside [0, 1], naming the first offending row."""
    if arr.size == 0:
        return
    bad = np.flatnonzero((arr < 0.0) | (arr > 1.0))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"{name} must lie in [0, 1]; row {i + 1} has value {arr[i]!r}")


def freeze(arr: np.ndarray) -> np.ndarray:
    """Mark an array read-only so shared containers stay immutable."""
    arr.setflags(write=False)
    return arr
