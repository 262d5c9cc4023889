"""Ergodicity experiments for semilinear SDEs driven by stable and Gaussian noise.

The state lives on a finite spectral truncation ``x = (x_1, ..., x_N)`` of a
diagonal operator with eigenvalues ``lambda_k``.  Each mode carries an
Ornstein-Uhlenbeck style linear part, a symmetric alpha-stable forcing with
scale ``b_k``, an optional Gaussian forcing with variance rate ``q_k``, a
constant forcing ``a_k`` and a shared Lipschitz drift ``F``.
"""

__version__ = "0.1.0"

from .drift import DriftSpec
from .ergodicity import (ConvergenceReport, convergence_experiment, estimate_invariant,
                         estimate_moment, estimate_tv, fit_rate, moment_curve, noise_floor)
from .exceptions import (ConvergenceError, InsufficientDataError, LevyErgoError,
                         ParameterError, StructuralError, UsageError)
from .levy_noise import StableParams, empirical_cf, sample_gaussian, sample_sas, stable_cf
from .mild_solver import (Ensemble, PathConfig, State, Trajectory, exp_euler_step,
                          picard_solve, simulate_ensemble, simulate_path)
from .propagator import ModeTransition, stationary_params, transition_params
from .rng import RandomStream
from .spectral_model import (AdmissibilityReport, PowerLawSpec, SpectralModel, build_model,
                             check_model, explicit_model, model_from_dict)

__all__ = [
    "AdmissibilityReport", "ConvergenceError", "ConvergenceReport", "DriftSpec", "Ensemble",
    "InsufficientDataError", "LevyErgoError", "ModeTransition", "ParameterError", "PathConfig",
    "PowerLawSpec", "RandomStream", "SpectralModel", "StableParams", "State", "StructuralError",
    "Trajectory", "UsageError", "build_model", "check_model", "convergence_experiment",
    "empirical_cf", "estimate_invariant", "estimate_moment", "estimate_tv", "exp_euler_step",
    "explicit_model", "fit_rate", "model_from_dict", "moment_curve", "noise_floor",
    "picard_solve", "sample_gaussian", "sample_sas", "simulate_ensemble", "simulate_path",
    "stable_cf", "stationary_params", "transition_params",
]
