"""Time stepping of the semilinear mild solution on a spectral truncation.

Two schemes share one noise path, so they can be compared pathwise:

``exp_euler``
    Linear flow and noise exact in law per step; the nonlinearity is frozen
    at the left endpoint and integrated against the exact kernel.
``picard``
    Fixed-point iteration ``V = S_t x + int_0^t S_{t-s} F(V_s + Z_s) ds`` on
    the grid with left-endpoint quadrature of the whole integrand, then
    ``X = V + Z``.  Slow, but it is a different discretization of the same
    integral equation, which makes it a useful cross-check.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_int, check_scalar, check_state_matrix
from .exceptions import ConvergenceError, UsageError
from .propagator import mode_stream_ids, model_transitions, sample_increments

SCHEMES = ("exp_euler", "picard")
_GRID_EPS = 1e-9
DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class PathConfig:
    step: float
    horizon: float
    scheme: str = "exp_euler"
    picard_tol: float = 1e-10
    picard_max_iter: int = 500

    def __post_init__(self):
        h = check_scalar(self.step, "step", lower=0.0, lower_inclusive=False)
        T = check_scalar(self.horizon, "horizon", lower=0.0, lower_inclusive=False)
        if T < h:
            raise UsageError(f"horizon {T} is shorter than one step {h}")
        if self.scheme not in SCHEMES:
            raise UsageError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        object.__setattr__(self, "step", h)
        object.__setattr__(self, "horizon", T)
        object.__setattr__(self, "picard_tol",
                           check_scalar(self.picard_tol, "picard_tol", lower=0.0,
                                        lower_inclusive=False))
        object.__setattr__(self, "picard_max_iter",
                           check_int(self.picard_max_iter, "picard_max_iter", lower=1))

    @property
    def n_steps(self):
        return math.ceil(self.horizon / self.step - _GRID_EPS)

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.step

    def grid_index(self, t):
        """Index of the grid point at or below ``t``."""
        return int(math.floor(t / self.step + _GRID_EPS))


@dataclass(frozen=True)
class State:
    coords: np.ndarray
    time: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    coords: np.ndarray
    scheme: str
    iterations: int = 0

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        for t, x in zip(self.times, self.coords):
            yield State(x, float(t))

    def at(self, t):
        i = int(np.searchsorted(self.times, t + _GRID_EPS, side="right")) - 1
        return State(self.coords[max(i, 0)], float(self.times[max(i, 0)]))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """``M`` independent states at a common time (rows are paths)."""

    time: float
    samples: np.ndarray
    path_ids: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise UsageError("ensemble samples must be a nonempty (M, N) array")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "path_ids", np.asarray(self.path_ids, dtype=np.int64))

    @property
    def m_paths(self):
        return self.samples.shape[0]

    @property
    def n_modes(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class PicardResult:
    path: np.ndarray
    iterations: int
    residuals: list


def _as_state(model, x):
    if isinstance(x, State):
        x = x.coords
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        # a scalar is a norm along e_1
        v = np.zeros(model.n_modes)
        v[0] = float(x)
        return v
    return x


# ---------------------------------------------------------------------------
# exponential Euler


def exp_euler_step(model, state, h, stream):
    """One exponential-Euler step of a single path.

    ``stream.stream_id`` is the path id and ``stream.counter`` the step index;
    the per-mode streams are derived from them.  Raises ``FloatingPointError``
    if the result is not finite.
    """
    tr = model_transitions(model, h)
    x = np.asarray(state.coords, dtype=float)
    ids = mode_stream_ids([stream.stream_id], model.n_modes)[0]
    inc = sample_increments(tr, stream.seed, ids, stream.counter)
    with np.errstate(over="ignore", invalid="ignore"):
        if model.drift.is_zero:
            new = tr.decay * x + inc
        else:
            new = tr.decay * x + tr.drift_gain * model.drift.evaluate(x) + inc
    if not np.all(np.isfinite(new)):
        raise FloatingPointError("trajectory blown: non-finite state")
    return State(new, state.time + h)


def _exp_euler_batch(model, X0, path_ids, seed, h, n_steps, snap_idx, first_step=0):
    """Advance a block of paths; returns snapshots (len(snap_idx), M, N) and a
    mask of paths that stayed finite."""
    tr = model_transitions(model, h)
    ids = mode_stream_ids(path_ids, model.n_modes)
    X = X0.copy()
    alive = np.ones(X.shape[0], dtype=bool)
    snaps = np.empty((len(snap_idx), *X.shape))
    want = {j: i for i, j in enumerate(snap_idx)}
    if 0 in want:
        snaps[want[0]] = X
    drift = None if model.drift.is_zero else model.drift
    for n in range(n_steps):
        inc = sample_increments(tr, seed, ids, first_step + n)
        # overflow is detected below and the path dropped
        with np.errstate(over="ignore", invalid="ignore"):
            if drift is None:
                X = tr.decay * X + inc
            else:
                X = tr.decay * X + tr.drift_gain * drift.evaluate(X) + inc
        bad = ~np.isfinite(X).all(axis=1)
        if bad.any():
            alive &= ~bad
            X[bad] = 0.0
        if n + 1 in want:
            snaps[want[n + 1]] = X
    return snaps, alive


# ---------------------------------------------------------------------------
# noise paths and Picard


def build_noise_path(model, path_ids, seed, h, n_steps):
    """Per-step convolution increments and their compounded values.

    Returns ``(increments, Z)`` with shapes (M, n_steps, N) and
    (M, n_steps + 1, N); ``Z[:, j]`` is the stochastic convolution at ``j h``.
    """
    tr = model_transitions(model, h)
    ids = mode_stream_ids(np.atleast_1d(path_ids), model.n_modes)
    M, N = ids.shape
    inc = np.empty((M, n_steps, N))
    Z = np.zeros((M, n_steps + 1, N))
    for n in range(n_steps):
        inc[:, n] = sample_increments(tr, seed, ids, n)
        Z[:, n + 1] = tr.decay * Z[:, n] + inc[:, n]
    return inc, Z


def coarsen_increments(increments, decay, factor=2):
    """Combine ``factor`` consecutive increments into one step of the coarse grid.

    Exact pathwise: the coarse increment is ``sum_i decay^(factor-1-i) inc_i``,
    the same compounding the convolution itself obeys.
    """
    M, n, N = increments.shape
    if n % factor:
        raise UsageError(f"{n} steps are not divisible by {factor}")
    blocks = increments.reshape(M, n // factor, factor, N)
    out = np.zeros((M, n // factor, N))
    for i in range(factor):
        out = decay * out + blocks[:, :, i]
    return out


def compound_increments(increments, decay):
    M, n, N = increments.shape
    Z = np.zeros((M, n + 1, N))
    for j in range(n):
        Z[:, j + 1] = decay * Z[:, j] + increments[:, j]
    return Z


def picard_solve(model, x, noise_path, h, tol=1e-10, max_iter=500, initial=None):
    """Solve the discretized mild equation by fixed-point iteration.

    Parameters
    ----------
    x : array_like, shape (N,) or (M, N)
        Initial state(s).
    noise_path : ndarray, shape (n + 1, N) or (M, n + 1, N)
        Stochastic convolution on the grid ``j h``, starting at 0.
    initial : ndarray, optional
        Starting iterate for ``V``; defaults to ``S_t x``.

    Returns
    -------
    PicardResult
        ``path`` is ``V + Z`` with the shape of ``noise_path``.  ``residuals``
        holds the sup-over-grid distance between successive iterates.
    """
    Z = np.asarray(noise_path, dtype=float)
    single = Z.ndim == 2
    if single:
        Z = Z[np.newaxis]
    M, n1, N = Z.shape
    X0 = check_state_matrix(_as_state(model, x), N, "x")
    if X0.shape[0] == 1 and M > 1:
        X0 = np.repeat(X0, M, axis=0)
    lam = model.lam
    times = np.arange(n1) * h
    free = np.exp(-np.outer(times, lam))[np.newaxis] * X0[:, np.newaxis, :]
    step_decay = np.exp(-lam * h)
    V = free.copy() if initial is None else np.array(initial, dtype=float).reshape(Z.shape)
    residuals = []
    for it in range(1, max_iter + 1):
        G = model.drift.evaluate(V + Z)
        new = np.empty_like(V)
        acc = np.zeros((M, N))
        new[:, 0] = free[:, 0]
        for j in range(1, n1):
            acc = step_decay * (acc + h * G[:, j - 1])
            new[:, j] = free[:, j] + acc
        res = float(np.max(np.linalg.norm(new - V, axis=-1)))
        residuals.append(res)
        V = new
        if res < tol:
            path = V + Z
            return PicardResult(path[0] if single else path, it, residuals)
    raise ConvergenceError(
        f"Picard iteration did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {residuals[-1]:.3g})", residual=residuals[-1], iterations=max_iter)


def exp_euler_path(model, x, increments, h):
    """Exponential-Euler path driven by precomputed increments (M, n, N)."""
    tr = model_transitions(model, h)
    M, n, N = increments.shape
    X = np.empty((M, n + 1, N))
    X[:, 0] = check_state_matrix(_as_state(model, x), N, "x")
    for j in range(n):
        cur = X[:, j]
        if model.drift.is_zero:
            X[:, j + 1] = tr.decay * cur + increments[:, j]
        else:
            X[:, j + 1] = (tr.decay * cur + tr.drift_gain * model.drift.evaluate(cur)
                           + increments[:, j])
    return X


def simulate_path(model, x, config, stream):
    """One trajectory on the grid of ``config``.

    ``stream.stream_id`` is used as the path id.  Both schemes read the same
    noise, so ``exp_euler`` and ``picard`` paths from one stream are directly
    comparable.
    """
    x = _as_state(model, x)
    n = config.n_steps
    inc, Z = build_noise_path(model, [stream.stream_id], stream.seed, config.step, n)
    if config.scheme == "exp_euler":
        coords = exp_euler_path(model, x, inc, config.step)[0]
        iterations = 0
    else:
        res = picard_solve(model, x, Z[0], config.step, config.picard_tol,
                           config.picard_max_iter)
        coords, iterations = res.path, res.iterations
    if not np.all(np.isfinite(coords)):
        raise FloatingPointError("trajectory blown: non-finite state")
    return Trajectory(config.times, coords, config.scheme, iterations)


# ---------------------------------------------------------------------------
# ensembles


def _initial_block(model, x, path_ids, offset):
    x = _as_state(model, x)
    if x.ndim == 1:
        X = check_state_matrix(x, model.n_modes, "x")
        return np.repeat(X, len(path_ids), axis=0)
    X = check_state_matrix(x, model.n_modes, "x")
    # per-path initial data, indexed by path id relative to the offset
    return X[np.asarray(path_ids) - offset]


def _run_block(model, x, config, seed, path_ids, offset, snap_idx):
    X0 = _initial_block(model, x, path_ids, offset)
    n = max(snap_idx)
    if config.scheme == "exp_euler":
        return _exp_euler_batch(model, X0, path_ids, seed, config.step, n, snap_idx)
    _, Z = build_noise_path(model, path_ids, seed, config.step, n)
    res = picard_solve(model, X0, Z, config.step, config.picard_tol, config.picard_max_iter)
    path = res.path
    alive = np.isfinite(path).all(axis=(1, 2))
    return np.stack([path[:, j] for j in snap_idx]), alive


def simulate_ensemble(model, x, config, m_paths, seed, times=None, path_offset=0,
                      n_jobs=1, chunk_size=DEFAULT_CHUNK):
    """Snapshots of ``m_paths`` independent trajectories.

    Path ``i`` uses path id ``path_offset + i``; the result depends only on
    ``(model, x, config, m_paths, seed, times, path_offset)``, not on
    ``n_jobs`` or ``chunk_size``.  ``x`` is one initial state shared by all
    paths, a scalar norm along ``e_1``, or an (m_paths, N) array.

    Requested times are snapped down to the grid.  Paths that produce
    non-finite values are dropped; ``provenance["n_blown"]`` counts them.

    Returns a list of :class:`Ensemble`, one per requested time.
    """
    m_paths = check_int(m_paths, "m_paths", lower=1)
    n_jobs = check_int(n_jobs, "n_jobs", lower=1)
    chunk_size = check_int(chunk_size, "chunk_size", lower=1)
    if times is None:
        times = [config.horizon]
    times = [check_scalar(t, "time", lower=0.0) for t in np.atleast_1d(times)]
    if max(times) > config.horizon + _GRID_EPS:
        raise UsageError(f"snapshot time {max(times)} exceeds horizon {config.horizon}")
    snap_idx = [config.grid_index(t) for t in times]
    ids = np.arange(path_offset, path_offset + m_paths, dtype=np.int64)
    if n_jobs > 1:
        chunk_size = min(chunk_size, -(-m_paths // n_jobs))
    chunks = [ids[i:i + chunk_size] for i in range(0, m_paths, chunk_size)]

    def work(chunk):
        return _run_block(model, x, config, seed, chunk, path_offset, snap_idx)

    if n_jobs == 1 or len(chunks) == 1:
        results = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(work, chunks))
    snaps = np.concatenate([r[0] for r in results], axis=1)
    alive = np.concatenate([r[1] for r in results])
    provenance = {
        "seed": int(seed),
        "scheme": config.scheme,
        "h": config.step,
        "model": model.fingerprint(),
        "path_offset": int(path_offset),
        "n_blown": int((~alive).sum()),
    }
    if not alive.any():
        raise FloatingPointError("every trajectory blew up")
    return [Ensemble(j * config.step, snaps[i][alive], ids[alive], dict(provenance))
            for i, j in enumerate(snap_idx)]
