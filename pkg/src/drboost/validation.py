"""Input validation helpers shared by the solvers and estimators."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ArgumentError


def check_vector(x, n=None, name="x"):
    """Return ``x`` as a 1-D float64 array, checking length and finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ArgumentError(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ArgumentError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def check_matrix(M, shape=None, name="M"):
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None:
        for want, got in zip(shape, arr.shape):
            if want is not None and want != got:
                raise ArgumentError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def check_symmetric(M, name="M"):
    """Square, exactly symmetric matrix check (no tolerance)."""
    arr = check_matrix(M, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {arr.shape}")
    if not np.array_equal(arr, arr.T):
        raise ArgumentError(f"{name} must be symmetric")
    return arr


def check_int(value, name, low=None, high=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if low is not None and value < low:
        raise ArgumentError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ArgumentError(f"{name} must be <= {high}, got {value}")
    return value


def check_real(value, name, low=None, high=None, low_open=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ArgumentError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ArgumentError(f"{name} must be finite")
    if low is not None:
        if low_open and value <= low:
            raise ArgumentError(f"{name} must be > {low}, got {value}")
        if not low_open and value < low:
            raise ArgumentError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ArgumentError(f"{name} must be <= {high}, got {value}")
    return value


def check_gamma(gamma):
    return check_real(gamma, "gamma", low=0.0, high=1.0, low_open=True)
