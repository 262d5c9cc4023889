"""Exact-in-law transitions of the linear part, one mode at a time.

For mode ``k`` the linear equation ``dx = (-lambda x + a) dt + sqrt(q) dW +
b dL`` (``L`` symmetric alpha-stable) has, over a step ``h``,

    x(h) = e^{-lambda h} x(0) + a (1 - e^{-lambda h}) / lambda
           + N(0, q (1 - e^{-2 lambda h}) / (2 lambda))
           + SaS(alpha, b ((1 - e^{-alpha lambda h}) / (alpha lambda))^{1/alpha})

and increments over disjoint steps are independent and identically
distributed.  There is no time-discretization error in this part.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_scalar
from .levy_noise import gaussian_from_uniforms, sas_from_uniforms
from .rng import uniform_pair

SERIES_CUTOFF = 1e-4
MODE_BITS = 16
MAX_MODES = 2 ** MODE_BITS - 1


def one_minus_exp_ratio(x):
    """``(1 - exp(-x)) / x`` for ``x >= 0`` without cancellation; 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = x < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x / 2.0 + x * x / 6.0, -np.expm1(-safe) / safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModeTransition:
    """Transition law over one step.  Fields are floats for a single mode or
    length-N arrays for a whole model; ``step`` is ``inf`` for the
    stationary law."""

    decay: object
    a_shift: object
    drift_gain: object
    gauss_std: object
    stable_scale: object
    alpha: float
    step: float


def _transition(lam, b, q, a, alpha, h):
    if np.isinf(h):
        decay = np.zeros_like(lam)
        drift_gain = 1.0 / lam
        gauss_var = q / (2.0 * lam)
        stable_pow = 1.0 / (alpha * lam)
    else:
        decay = np.exp(-lam * h)
        drift_gain = h * one_minus_exp_ratio(lam * h)
        gauss_var = q * h * one_minus_exp_ratio(2.0 * lam * h)
        stable_pow = h * one_minus_exp_ratio(alpha * lam * h)
    return decay, a * drift_gain, drift_gain, np.sqrt(gauss_var), b * stable_pow ** (1.0 / alpha)


def transition_params(model, k, h):
    """Exact one-step law of mode ``k`` (1-based) over a step ``h > 0``."""
    k = check_int(k, "k", lower=1)
    if k > model.n_modes:
        raise IndexError(f"mode {k} out of range 1..{model.n_modes}")
    h = check_scalar(h, "h", lower=0.0, lower_inclusive=False, finite=False)
    i = k - 1
    parts = _transition(model.lam[i], model.b[i], model.q[i], model.a[i], model.alpha, h)
    return ModeTransition(*(float(p) for p in parts), alpha=model.alpha, step=h)


def model_transitions(model, h):
    """All modes at once; array-valued :class:`ModeTransition`."""
    h = check_scalar(h, "h", lower=0.0, lower_inclusive=False, finite=False)
    parts = _transition(model.lam, model.b, model.q, model.a, model.alpha, h)
    return ModeTransition(*parts, alpha=model.alpha, step=h)


def stationary_params(model, k=None):
    """The ``h -> inf`` limit: a draw is a mode coordinate of the invariant
    law of the linear equation.  ``k=None`` returns all modes."""
    if k is None:
        return model_transitions(model, np.inf)
    return transition_params(model, k, np.inf)


def mode_stream_ids(path_ids, n_modes):
    """Stream id of each (path, mode) pair, shape (len(path_ids), n_modes).

    Mode ``k`` of path ``p`` uses ``p * 2**16 + k``; paths must stay below
    ``2**48``.
    """
    if n_modes > MAX_MODES:
        raise ValueError(f"at most {MAX_MODES} modes are supported")
    path_ids = np.asarray(path_ids, dtype=np.uint64)
    k = np.arange(1, n_modes + 1, dtype=np.uint64)
    return (path_ids[:, None] << np.uint64(MODE_BITS)) | k[None, :]


def noise_from_uniforms(tr, g0, g1, s0, s1):
    """Gaussian plus stable part of an increment (no deterministic shift)."""
    out = tr.gauss_std * gaussian_from_uniforms(g0, g1)
    scale = np.asarray(tr.stable_scale)
    if np.any(scale > 0):
        z = sas_from_uniforms(tr.alpha, s0, s1)
        out = out + np.where(scale > 0, scale * z, 0.0)
    return out


def sample_increments(tr, seed, stream_ids, step_index):
    """Convolution increments for one step across many (path, mode) streams.

    ``stream_ids`` has shape (M, N) to match array-valued ``tr``.  Step ``n``
    reads counter ``2n`` for the Gaussian part and ``2n + 1`` for the stable
    part of each stream.
    """
    n = np.uint64(2 * int(step_index))
    g0, g1 = uniform_pair(seed, stream_ids, n)
    s0, s1 = uniform_pair(seed, stream_ids, n + np.uint64(1))
    return tr.a_shift + noise_from_uniforms(tr, g0, g1, s0, s1)


def sample_convolution_increment(tr, stream, size=None):
    """Increment ``a_shift + Gaussian + stable`` drawn from ``stream``.

    Draw ``j`` of the stream uses counters ``counter + 2j`` (Gaussian) and
    ``counter + 2j + 1`` (stable), the same layout the ensemble code uses.
    """
    count = 1 if size is None else int(size)
    base = np.uint64(stream.counter) + 2 * np.arange(count, dtype=np.uint64)
    g0, g1 = uniform_pair(stream.seed, stream.stream_id, base)
    s0, s1 = uniform_pair(stream.seed, stream.stream_id, base + np.uint64(1))
    out = tr.a_shift + noise_from_uniforms(tr, g0, g1, s0, s1)
    return float(out[0]) if size is None else out
