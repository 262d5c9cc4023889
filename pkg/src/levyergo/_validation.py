"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import math
import numbers

import numpy as np

from .exceptions import ParameterError, UsageError


def check_scalar(value, name, *, lower=None, upper=None, lower_inclusive=True,
                 upper_inclusive=True, finite=True):
    """Validate a real scalar and return it as ``float``.

    Raises ``ParameterError`` when the value is not a real number, is
    non-finite (if ``finite``), or falls outside the requested bounds.
    """
    if isinstance(value, bool) or not isinstance(value, (numbers.Real, np.floating, np.integer)):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (finite and math.isinf(value)):
        raise ParameterError(f"{name} must be finite, got {value}")
    if lower is not None:
        bad = value < lower if lower_inclusive else value <= lower
        if bad:
            op = ">=" if lower_inclusive else ">"
            raise ParameterError(f"{name} must be {op} {lower}, got {value}")
    if upper is not None:
        bad = value > upper if upper_inclusive else value >= upper
        if bad:
            op = "<=" if upper_inclusive else "<"
            raise ParameterError(f"{name} must be {op} {upper}, got {value}")
    return value


def check_alpha(alpha, *, allow_gaussian=True):
    upper_inclusive = bool(allow_gaussian)
    return check_scalar(alpha, "alpha", lower=0.0, lower_inclusive=False,
                        upper=2.0, upper_inclusive=upper_inclusive)


def check_int(value, name, *, lower=None):
    if isinstance(value, bool) or not isinstance(value, (numbers.Integral, np.integer)):
        raise UsageError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if lower is not None and value < lower:
        raise UsageError(f"{name} must be >= {lower}, got {value}")
    return value


def check_vector(values, name, *, length=None, nonnegative=False):
    """Return a finite 1-d float array, optionally of fixed length."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise UsageError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise UsageError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must contain only finite values")
    if nonnegative and np.any(arr < 0):
        raise ParameterError(f"{name} must be nonnegative")
    return arr


def check_state_matrix(X, n_features=None, name="X"):
    """Coerce to a 2-d finite array of shape (n_samples, n_features).

    A 1-d input is read as a single sample.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise UsageError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise UsageError(f"{name} has no samples")
    if n_features is not None and arr.shape[1] != n_features:
        raise UsageError(
            f"{name} has {arr.shape[1]} features but {n_features} were expected")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must contain only finite values")
    return arr


def strictly_less(a, b, tol=1e-12):
    """``a < b`` with values within ``tol`` of the bound treated as equal.

    Boundary cases of the admissibility inequalities must fail, and expressions
    like ``1.9 * (1 / 1.9)`` do not land exactly on the bound in floating point.
    """
    return a < b and not math.isclose(a, b, rel_tol=tol, abs_tol=tol)
