"""scikit-learn style wrappers around the simulation and fitting routines.

These follow the usual conventions (hyperparameters in ``__init__``, learned
state in trailing-underscore attributes, ``fit`` returns ``self``) so they
work with ``clone``, ``get_params``/``set_params`` and pipelines.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ergodicity import (DEFAULT_BINS, DIAGNOSTIC_BINS, estimate_invariant,
                         estimate_tv, fit_rate)
from .exceptions import UsageError
from .mild_solver import PathConfig, simulate_ensemble


class StochasticFlow(TransformerMixin, BaseEstimator):
    """Map initial states to their random image at time ``t``.

    Row ``i`` of ``X`` is used as the initial condition of path
    ``path_offset + i``, so ``transform`` is deterministic given ``seed``.

    Parameters
    ----------
    model : SpectralModel
    t : float
        Time horizon.
    step : float
        Grid step.
    scheme : {"exp_euler", "picard"}
    seed : int
    path_offset : int
    n_jobs : int
    """

    def __init__(self, model=None, t=1.0, step=0.01, scheme="exp_euler", seed=0,
                 path_offset=0, n_jobs=1):
        self.model = model
        self.t = t
        self.step = step
        self.scheme = scheme
        self.seed = seed
        self.path_offset = path_offset
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.model is None:
            raise UsageError("StochasticFlow needs a model")
        X = check_array(X)
        if X.shape[1] != self.model.n_modes:
            raise UsageError(f"X has {X.shape[1]} columns, model has {self.model.n_modes} modes")
        self.n_features_in_ = X.shape[1]
        self.config_ = PathConfig(min(self.step, self.t), self.t, self.scheme)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise UsageError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        ens = simulate_ensemble(self.model, X, self.config_, X.shape[0], self.seed,
                                times=[self.t], path_offset=self.path_offset,
                                n_jobs=self.n_jobs)[0]
        if ens.provenance["n_blown"]:
            out = np.full(X.shape, np.nan)
            out[ens.path_ids - self.path_offset] = ens.samples
            return out
        return ens.samples


class ExponentialRateRegressor(RegressorMixin, BaseEstimator):
    """Fit ``y = C exp(-beta t)`` by least squares on ``log y``.

    Parameters
    ----------
    noise_floor : float
        Targets at or below this value are ignored during ``fit``.

    Attributes
    ----------
    beta_, log_c_, r_squared_ : float
    points_used_, points_dropped_ : int
    """

    def __init__(self, noise_floor=0.0):
        self.noise_floor = noise_floor

    def fit(self, X, y):
        t = np.asarray(X, dtype=float)
        if t.ndim == 2:
            if t.shape[1] != 1:
                raise UsageError("ExponentialRateRegressor takes a single time column")
            t = t[:, 0]
        y = np.asarray(y, dtype=float)
        fit = fit_rate(t, y, self.noise_floor)
        self.beta_ = fit.beta
        self.log_c_ = fit.log_c
        self.r_squared_ = fit.r_squared
        self.points_used_ = fit.points_used
        self.points_dropped_ = fit.points_dropped
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "beta_")
        t = np.asarray(X, dtype=float)
        if t.ndim == 2:
            t = t[:, 0]
        return np.exp(self.log_c_ - self.beta_ * t)


class InvariantMeasureEstimator(BaseEstimator):
    """Long-run ensemble approximating the invariant law of ``model``.

    ``fit(X)`` starts one path per row of ``X`` (or ``m_paths`` paths from the
    origin if ``X`` is None) and runs them to ``t_burn`` (default
    ``20 / lambda_1``).

    Attributes
    ----------
    ensemble_ : Ensemble
    converged_ : bool
        Outcome of the two-time stationarity diagnostic.
    diagnostic_tv_ : float
    """

    def __init__(self, model=None, m_paths=10_000, t_burn=None, step=0.05,
                 scheme="exp_euler", seed=0, dims=(1,), bins_per_dim=DEFAULT_BINS,
                 diagnostic_bins=DIAGNOSTIC_BINS, n_jobs=1):
        self.model = model
        self.m_paths = m_paths
        self.t_burn = t_burn
        self.step = step
        self.scheme = scheme
        self.seed = seed
        self.dims = dims
        self.bins_per_dim = bins_per_dim
        self.diagnostic_bins = diagnostic_bins
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        if self.model is None:
            raise UsageError("InvariantMeasureEstimator needs a model")
        t_burn = self.t_burn if self.t_burn is not None else 20.0 / self.model.decay_rate
        config = PathConfig(min(self.step, t_burn), t_burn, self.scheme)
        if X is None:
            x, m = 0.0, self.m_paths
        else:
            x = check_array(X)
            m = x.shape[0]
        ens = estimate_invariant(self.model, config, m, t_burn, self.seed, x, self.dims,
                                 self.diagnostic_bins, n_jobs=self.n_jobs)
        self.ensemble_ = ens
        self.converged_ = bool(ens.provenance["converged"])
        self.diagnostic_tv_ = float(ens.provenance["diagnostic_tv"])
        self.n_features_in_ = self.model.n_modes
        return self

    def sample(self):
        check_is_fitted(self, "ensemble_")
        return self.ensemble_.samples

    def distance(self, X):
        """Projected TV distance between the rows of ``X`` and the fitted law."""
        check_is_fitted(self, "ensemble_")
        X = check_array(X)
        return estimate_tv(X, self.ensemble_.samples, self.dims, self.bins_per_dim).value
