"""Monte Carlo checks of moment bounds and total-variation convergence.

Total variation is estimated on low-dimensional coordinate projections with
a shared histogram, so every reported value is a lower bound (up to
binning noise) for the distance between the full laws.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._validation import check_int, check_scalar
from .exceptions import InsufficientDataError, UsageError
from .mild_solver import Ensemble, PathConfig, simulate_ensemble

DEFAULT_BINS = 64
DIAGNOSTIC_BINS = 10
CLIP_PERCENTILES = (0.5, 99.5)
REFERENCE_OFFSET = 1 << 40
NULL_OFFSET = 3 << 39
INDEPENDENT_OFFSET = 1 << 41


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    p: float
    warning: str | None = None


@dataclass(frozen=True)
class TVEstimate:
    value: float
    dims: tuple
    bins_per_dim: int
    samples_per_side: int
    stderr_proxy: float = 0.0


@dataclass(frozen=True)
class RateFit:
    beta: float
    log_c: float
    r_squared: float
    points_used: int
    points_dropped: int = 0

    @property
    def c(self):
        return math.exp(self.log_c)

    def predict(self, t):
        return np.exp(self.log_c - self.beta * np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# moments


def estimate_moment(ens, p, alpha=None):
    """Mean of ``|X|^p`` over the ensemble rows with a jackknife standard error.

    With ``alpha`` given and ``p >= alpha`` the moment may be infinite; the
    estimate is still returned, with a warning string attached.
    """
    p = check_scalar(p, "p", lower=0.0, lower_inclusive=False)
    samples = ens.samples if isinstance(ens, Ensemble) else np.atleast_2d(ens)
    y = np.linalg.norm(samples, axis=1) ** p
    M = y.size
    value = float(y.mean())
    if M > 1:
        loo = (y.sum() - y) / (M - 1)
        stderr = float(np.sqrt((M - 1) / M * np.sum((loo - loo.mean()) ** 2)))
    else:
        stderr = math.nan
    note = None
    if alpha is not None and alpha < 2 and p >= alpha:
        note = f"p={p:g} >= alpha={alpha:g}: moment may be infinite, estimate unstable"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return MomentEstimate(value, stderr, p, note)


# ---------------------------------------------------------------------------
# total variation


def _projection(ens, dims):
    samples = ens.samples if isinstance(ens, Ensemble) else np.asarray(ens, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    idx = np.asarray(dims, dtype=int) - 1
    if np.any(idx < 0) or np.any(idx >= samples.shape[1]):
        raise UsageError(f"dims {list(dims)} out of range 1..{samples.shape[1]}")
    return samples[:, idx], samples.shape[1]


def _histogram_pair(A, B, bins, clip):
    """Cell frequencies of A and B on a shared grid with overflow cells."""
    both = np.concatenate([A, B])
    lo = np.percentile(both, clip[0], axis=0)
    hi = np.percentile(both, clip[1], axis=0)
    n_cells = bins + 2
    code_a = np.zeros(A.shape[0], dtype=np.int64)
    code_b = np.zeros(B.shape[0], dtype=np.int64)
    for d in range(A.shape[1]):
        if hi[d] > lo[d]:
            edges = np.linspace(lo[d], hi[d], bins + 1)
        else:
            edges = np.array([lo[d]])
        code_a = code_a * n_cells + np.searchsorted(edges, A[:, d], side="right")
        code_b = code_b * n_cells + np.searchsorted(edges, B[:, d], side="right")
    size = n_cells ** A.shape[1]
    p = np.bincount(code_a, minlength=size) / A.shape[0]
    q = np.bincount(code_b, minlength=size) / B.shape[0]
    return p, q


def estimate_tv(a, b, dims=(1,), bins_per_dim=DEFAULT_BINS, clip=CLIP_PERCENTILES):
    """Plug-in total variation between two ensembles on coordinates ``dims``.

    ``dims`` are 1-based mode indices (at most three).  Both samples are cut
    to the smaller sample size.  The histogram spans the joint
    ``clip`` percentile box of the pooled data in each coordinate, plus one
    overflow cell on either side, so heavy tails keep their mass.
    """
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if not 1 <= len(dims) <= 3:
        raise UsageError("dims must name between one and three coordinates")
    bins = check_int(bins_per_dim, "bins_per_dim", lower=1)
    A, na = _projection(a, dims)
    B, nb = _projection(b, dims)
    if na != nb:
        raise UsageError(f"ensembles have different mode counts ({na} vs {nb})")
    m = min(A.shape[0], B.shape[0])
    if m == 0:
        raise UsageError("empty ensemble")
    A, B = A[:m], B[:m]
    p, q = _histogram_pair(A, B, bins, clip)
    value = min(1.0, 0.5 * float(np.abs(p - q).sum()))
    proxy = 0.5 * float(np.sum(np.sqrt((p + q) / m)))
    return TVEstimate(value, dims, bins, m, proxy)


def noise_floor(m_samples):
    """Scale of the plug-in TV between two samples of one law."""
    return 2.0 / math.sqrt(m_samples)


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(times, values, noise_floor=0.0):
    """Least-squares fit of ``log value = log C - beta t``.

    Points at or below ``noise_floor`` (scalar or per-point) are dropped
    before fitting.  At least three must remain.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise UsageError("times and values must be 1-d arrays of equal length")
    floor = np.broadcast_to(np.asarray(noise_floor, dtype=float), y.shape)
    keep = np.isfinite(y) & (y > floor) & (y > 0)
    used = int(keep.sum())
    if used < 3:
        raise InsufficientDataError(
            f"only {used} of {y.size} points lie above the noise floor; need 3")
    reg = stats.linregress(t[keep], np.log(y[keep]))
    r2 = min(1.0, float(reg.rvalue) ** 2)
    return RateFit(-float(reg.slope), float(reg.intercept), r2, used, y.size - used)


# ---------------------------------------------------------------------------
# invariant measure and convergence experiments


def _initial_vector(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        v = np.zeros(model.n_modes)
        v[0] = float(x)
        return v
    if x.shape[-1] != model.n_modes or x.ndim > 2:
        raise UsageError(f"initial condition must have {model.n_modes} coordinates")
    return x


def estimate_invariant(model, config, m_paths, t_burn, seed, x=0.0, dims=(1,),
                       diagnostic_bins=DIAGNOSTIC_BINS, path_offset=REFERENCE_OFFSET,
                       n_jobs=1):
    """Long-run ensemble from ``x`` as a stand-in for the invariant law.

    ``x`` is a single start (vector or norm along ``e_1``) or an
    (m_paths, N) array of per-path starts.  The returned ensemble sits at
    ``t_burn``.  Its provenance carries a
    two-time stationarity diagnostic: the projected TV between the
    snapshots at ``t_burn`` and ``2 t_burn`` (same paths) must be below
    ``3 / sqrt(M)``, otherwise ``converged`` is False.  The step is
    shortened to ``t_burn`` if needed so both snapshots are distinct grid
    points.
    """
    t_burn = check_scalar(t_burn, "t_burn", lower=0.0, lower_inclusive=False)
    step = min(config.step, t_burn)
    cfg = PathConfig(step, 2 * t_burn, config.scheme, config.picard_tol,
                     config.picard_max_iter)
    first, second = simulate_ensemble(model, _initial_vector(model, x), cfg, m_paths, seed,
                                      times=[t_burn, 2 * t_burn], path_offset=path_offset,
                                      n_jobs=n_jobs)
    tv = estimate_tv(first, second, dims, diagnostic_bins)
    threshold = 3.0 / math.sqrt(first.m_paths)
    prov = dict(first.provenance, diagnostic_tv=tv.value, diagnostic_threshold=threshold,
                converged=tv.value < threshold, t_burn=t_burn)
    return replace(first, provenance=prov)


@dataclass
class ConvergenceReport:
    """Per-initial-condition TV curves, rate fits, and the prefactor check."""

    times: list
    x_norms: list
    tv: dict
    fits: dict
    reference: Ensemble
    p: float
    null_tv: float
    floor: float
    rank_correlation: float | None = None
    errors: dict = field(default_factory=dict)
    lambda_1: float | None = None

    def rows(self):
        """Flat records ``(x_norm, t, tv, tv_stderr_proxy, beta, log_c, r2)``."""
        out = []
        for i, xn in enumerate(self.x_norms):
            fit = self.fits.get(i)
            for t, est in zip(self.times, self.tv[i]):
                out.append({
                    "x_norm": xn, "t": t, "tv": est.value, "tv_stderr_proxy": est.stderr_proxy,
                    "beta": fit.beta if fit else math.nan,
                    "log_c": fit.log_c if fit else math.nan,
                    "r2": fit.r_squared if fit else math.nan,
                })
        return out

    def summary(self):
        lines = [f"reference: t_burn={self.reference.provenance.get('t_burn')}, "
                 f"M={self.reference.m_paths}, "
                 f"stationarity diagnostic {self.reference.provenance.get('diagnostic_tv'):.4g} "
                 f"({'converged' if self.reference.provenance.get('converged') else 'NOT converged'})",
                 f"null TV {self.null_tv:.4g}, fit floor {self.floor:.4g}"]
        for i, xn in enumerate(self.x_norms):
            fit = self.fits.get(i)
            if fit is None:
                lines.append(f"|x|={xn:g}: no fit ({self.errors.get(i)})")
            else:
                lines.append(f"|x|={xn:g}: beta={fit.beta:.4g} log_c={fit.log_c:.4g} "
                             f"r2={fit.r_squared:.4f} points={fit.points_used} "
                             f"(dropped {fit.points_dropped})"
                             + (f" beta/lambda_1={fit.beta / self.lambda_1:.4g}"
                                if self.lambda_1 else ""))
        if self.rank_correlation is not None:
            lines.append(f"rank correlation of C(x) with 1+|x|^p (p={self.p:g}): "
                         f"{self.rank_correlation:.3g}")
        return "\n".join(lines)


def convergence_experiment(model, x_list, time_grid, m_paths, seed, config=None, dims=(1,),
                           bins_per_dim=DEFAULT_BINS, t_ref=None, p=None, n_jobs=1):
    """TV distance to the invariant law along ``time_grid`` for each start.

    The reference ensemble comes from :func:`estimate_invariant` started at 0
    and run to ``t_ref`` (default ``20 / lambda_1``) on its own streams.  The
    ensembles for the different starts share path ids with each other, which
    keeps the comparison across ``x`` low-variance.

    A second, independent reference ensemble measures the null level of the
    estimator (TV between two samples of one law at this ``M`` and binning).
    Rate fits drop points below ``max(2 / sqrt(M), 2 * null_tv)``.
    """
    m_paths = check_int(m_paths, "m_paths", lower=1)
    times = [float(t) for t in time_grid]
    if config is None:
        config = PathConfig(step=min(0.05, min(times)), horizon=max(times))
    elif config.horizon < max(times):
        config = PathConfig(config.step, max(times), config.scheme, config.picard_tol,
                            config.picard_max_iter)
    if t_ref is None:
        t_ref = 20.0 / model.decay_rate
    if p is None:
        p = model.alpha / 2.0 if model.alpha < 2 else 1.0
    ref = estimate_invariant(model, config, m_paths, t_ref, seed, n_jobs=n_jobs)
    twin = estimate_invariant(model, config, m_paths, t_ref, seed, path_offset=NULL_OFFSET,
                              n_jobs=n_jobs)
    null_tv = estimate_tv(twin, ref, dims, bins_per_dim).value
    floor = max(noise_floor(ref.m_paths), 2.0 * null_tv)
    xs = [_initial_vector(model, x) for x in x_list]
    norms = [float(np.linalg.norm(x)) for x in xs]
    tv, fits, errors = {}, {}, {}
    for i, x in enumerate(xs):
        snaps = simulate_ensemble(model, x, config, m_paths, seed, times=times, n_jobs=n_jobs)
        tv[i] = [estimate_tv(s, ref, dims, bins_per_dim) for s in snaps]
        try:
            fits[i] = fit_rate(times, [e.value for e in tv[i]], floor)
        except InsufficientDataError as exc:
            fits[i] = None
            errors[i] = str(exc)
    rank = None
    fitted = [i for i in range(len(xs)) if fits[i] is not None]
    pref = [1 + norms[i] ** p for i in fitted]
    if len(set(pref)) >= 2:
        rank = float(stats.spearmanr(pref, [fits[i].log_c for i in fitted]).statistic)
    return ConvergenceReport(times, norms, tv, fits, ref, p, null_tv, floor, rank, errors,
                             model.decay_rate)


def moment_curve(model, x, config, times, m_paths, seed, p, n_jobs=1):
    """``E|X_t^x|^p`` along ``times`` (one ensemble run, several snapshots)."""
    snaps = simulate_ensemble(model, _initial_vector(model, x), config, m_paths, seed,
                              times=times, n_jobs=n_jobs)
    alpha = model.alpha if model.has_stable else None
    return [estimate_moment(s, p, alpha) for s in snaps], snaps


def excess_moment_curve(model, x, config, times, m_paths, seed, p, n_jobs=1):
    """``E|X_t^x|^p - E|X_t^0|^p`` under common random numbers.

    Both starts share every noise draw, so the difference is estimated from
    pathwise differences.  Returns ``(values, stderrs)``.
    """
    x_snaps = simulate_ensemble(model, _initial_vector(model, x), config, m_paths, seed,
                                times=times, n_jobs=n_jobs)
    z_snaps = simulate_ensemble(model, _initial_vector(model, 0.0), config, m_paths, seed,
                                times=times, n_jobs=n_jobs)
    vals, errs = [], []
    for a, b in zip(x_snaps, z_snaps):
        common = np.intersect1d(a.path_ids, b.path_ids)
        ia = np.searchsorted(a.path_ids, common)
        ib = np.searchsorted(b.path_ids, common)
        d = (np.linalg.norm(a.samples[ia], axis=1) ** p
             - np.linalg.norm(b.samples[ib], axis=1) ** p)
        vals.append(float(d.mean()))
        errs.append(float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan)
    return np.array(vals), np.array(errs)
