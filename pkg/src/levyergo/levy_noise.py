"""Symmetric alpha-stable and Gaussian variates on counter-based streams.

Characteristic-function convention: a symmetric stable variate with index
``alpha`` and scale ``sigma`` satisfies ``E exp(i theta X) = exp(-sigma**alpha
* |theta|**alpha)``.  At ``alpha = 2`` this is a centred Gaussian with
standard deviation ``sigma * sqrt(2)``.

The transforms below take uniforms as input, so the vectorized ensemble
code and the scalar stream API share one code path.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_alpha, check_scalar
from .exceptions import UsageError
from .rng import RandomStream

ALPHA_ONE_TOL = 1e-9


@dataclass(frozen=True)
class StableParams:
    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "scale", check_scalar(self.scale, "scale", lower=0.0))


def gaussian_from_uniforms(u0, u1):
    """Standard normal via Box-Muller (cosine branch only)."""
    return np.sqrt(-2.0 * np.log(u0)) * np.cos(2.0 * np.pi * u1)


def sas_from_uniforms(alpha, u0, u1):
    """Unit-scale symmetric stable variates (Chambers-Mallows-Stuck).

    ``u0`` drives the angle on (-pi/2, pi/2), ``u1`` the unit exponential.
    ``alpha`` is a scalar.
    """
    if alpha == 2.0:
        return np.sqrt(2.0) * gaussian_from_uniforms(u0, u1)
    angle = np.pi * (np.asarray(u0) - 0.5)
    if abs(alpha - 1.0) < ALPHA_ONE_TOL:
        return np.tan(angle)
    expo = -np.log(u1)
    return (np.sin(alpha * angle) / np.cos(angle) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * angle) / expo) ** ((1.0 - alpha) / alpha))


def _as_output(values, size):
    if size is None:
        return float(values)
    return values


def sample_sas(params, stream, size=None):
    """Draw symmetric alpha-stable variates from ``stream``.

    One variate consumes one counter.  With ``size=None`` a float is
    returned, otherwise an array of ``size`` draws at consecutive counters.
    A zero scale returns exact zeros.
    """
    if not isinstance(params, StableParams):
        params = StableParams(*params)
    u0, u1 = stream.uniforms(size)
    if params.scale == 0.0:
        return _as_output(np.zeros(np.shape(u0)), size)
    return _as_output(params.scale * sas_from_uniforms(params.alpha, u0, u1), size)


def sample_gaussian(std, stream, size=None):
    """Centred Gaussian draws with standard deviation ``std``."""
    std = check_scalar(std, "std", lower=0.0)
    u0, u1 = stream.uniforms(size)
    return _as_output(std * gaussian_from_uniforms(u0, u1), size)


def empirical_cf(samples, theta, return_imag=False):
    """Real part of the empirical characteristic function at ``theta``.

    For symmetric laws the imaginary part is pure noise; pass
    ``return_imag=True`` to get it as a second value for diagnostics.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise UsageError("empirical_cf needs at least one sample")
    phase = theta * x
    re = float(np.mean(np.cos(phase)))
    if return_imag:
        return re, float(np.mean(np.sin(phase)))
    return re


def stable_cf(theta, alpha, scale=1.0):
    """Closed-form characteristic function matching :func:`sample_sas`."""
    return np.exp(-(scale ** alpha) * np.abs(theta) ** alpha)


__all__ = [
    "RandomStream",
    "StableParams",
    "empirical_cf",
    "gaussian_from_uniforms",
    "sample_gaussian",
    "sample_sas",
    "sas_from_uniforms",
    "stable_cf",
]
