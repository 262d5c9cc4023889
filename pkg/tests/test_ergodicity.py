import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from levyergo.ergodicity import (ConvergenceReport, RateFit, convergence_experiment,
                                 estimate_invariant, estimate_moment, estimate_tv,
                                 excess_moment_curve, fit_rate, moment_curve, noise_floor)
from levyergo.exceptions import InsufficientDataError, UsageError
from levyergo.mild_solver import Ensemble, PathConfig
from levyergo.spectral_model import explicit_model


def ens(samples, t=0.0):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    return Ensemble(t, samples, np.arange(samples.shape[0]))


class TestTV:
    def test_identical_sets(self):
        x = np.random.default_rng(0).standard_normal((500, 2))
        assert estimate_tv(ens(x), ens(x.copy())).value == 0.0

    def test_disjoint_supports(self):
        rng = np.random.default_rng(1)
        a, b = rng.uniform(0, 1, 1000), rng.uniform(5, 6, 1000)
        assert estimate_tv(ens(a), ens(b)).value == 1.0

    def test_shifted_gaussians(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(100_000), 1.0 + rng.standard_normal(100_000)
        oracle = 2 * stats.norm.cdf(0.5) - 1
        assert oracle == pytest.approx(0.3829, abs=1e-4)
        assert estimate_tv(ens(a), ens(b), bins_per_dim=64).value == pytest.approx(oracle,
                                                                                   abs=0.03)

    def test_larger_side_is_cut(self):
        rng = np.random.default_rng(3)
        est = estimate_tv(ens(rng.standard_normal(300)), ens(rng.standard_normal(700)))
        assert est.samples_per_side == 300
        assert est.dims == (1,) and est.bins_per_dim == 64

    def test_heavy_tails_stay_in_overflow_cells(self):
        # a huge outlier must not stretch the grid into one useless cell
        rng = np.random.default_rng(4)
        a = rng.standard_normal(10_000)
        b = 1.0 + rng.standard_normal(10_000)
        a[0] = 1e12
        assert estimate_tv(ens(a), ens(b)).value > 0.3

    def test_projection_monotonicity(self):
        rng = np.random.default_rng(5)
        m = 100_000
        a = rng.standard_normal((m, 3))
        b = rng.standard_normal((m, 3)) + [0.5, 0.0, 0.3]
        one = estimate_tv(ens(a), ens(b), dims=[1]).value
        two = estimate_tv(ens(a), ens(b), dims=[1, 2]).value
        three = estimate_tv(ens(a), ens(b), dims=[1, 2, 3]).value
        assert one <= two + 0.02
        assert two <= three + 0.02

    def test_mismatched_modes(self):
        with pytest.raises(UsageError):
            estimate_tv(ens(np.zeros((5, 2))), ens(np.zeros((5, 3))))

    @pytest.mark.parametrize("dims", [[], [1, 2, 3, 4], [0], [5]])
    def test_bad_dims(self, dims):
        x = ens(np.zeros((5, 4)))
        with pytest.raises(UsageError):
            estimate_tv(x, x, dims=dims)

    def test_noise_floor(self):
        assert noise_floor(10_000) == pytest.approx(0.02)


samples = arrays(np.float64, st.integers(1, 200), elements=st.floats(-1e6, 1e6))


@settings(max_examples=100, deadline=None)
@given(a=samples, b=samples, bins=st.integers(1, 80))
def test_tv_is_bounded_symmetric_and_zero_on_itself(a, b, bins):
    ea, eb = ens(a), ens(b)
    v = estimate_tv(ea, eb, bins_per_dim=bins).value
    assert 0.0 <= v <= 1.0
    assert v == estimate_tv(eb, ea, bins_per_dim=bins).value
    assert estimate_tv(ea, ea, bins_per_dim=bins).value == 0.0


class TestFitRate:
    def test_exact_exponential(self):
        t = np.arange(6.0)
        fit = fit_rate(t, 2 * np.exp(-0.5 * t))
        assert fit.beta == pytest.approx(0.5, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.c == pytest.approx(2.0)
        assert fit.points_used == 6 and fit.points_dropped == 0
        np.testing.assert_allclose(fit.predict(t), 2 * np.exp(-0.5 * t))

    def test_multiplicative_noise(self):
        t = np.arange(6.0)
        noise = np.random.default_rng(6).uniform(0.95, 1.05, t.size)
        fit = fit_rate(t, 2 * np.exp(-0.5 * t) * noise)
        assert 0.4 <= fit.beta <= 0.6
        assert fit.r_squared > 0.9

    def test_points_below_floor_are_dropped(self):
        t = np.arange(6.0)
        fit = fit_rate(t, 2 * np.exp(-0.5 * t), noise_floor=0.2)
        assert fit.points_used == 5 and fit.points_dropped == 1
        assert fit.beta == pytest.approx(0.5)

    def test_per_point_floor(self):
        t = np.arange(4.0)
        fit = fit_rate(t, np.exp(-t), noise_floor=[0, 0, 0, 1.0])
        assert fit.points_used == 3

    def test_all_below_floor(self):
        with pytest.raises(InsufficientDataError):
            fit_rate([0, 1, 2, 3], [0.01] * 4, noise_floor=0.02)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            fit_rate([0, 1, 2], [1, 2])


class TestMoments:
    def test_equal_rows(self):
        e = ens(np.tile([0.0, 2.0], (10, 1)))
        est = estimate_moment(e, 1.0)
        assert est.value == 2.0 and est.stderr == 0.0

    def test_jackknife_of_mean_is_classical_stderr(self):
        x = np.random.default_rng(7).standard_normal((400, 2))
        est = estimate_moment(ens(x), 1.5)
        y = np.linalg.norm(x, axis=1) ** 1.5
        assert est.stderr == pytest.approx(y.std(ddof=1) / math.sqrt(y.size), rel=1e-10)

    def test_stationary_ou_second_moment(self, ou_model):
        snap = moment_curve(ou_model, 0.0, PathConfig(0.1, 10.0), [10.0], 10_000, 3, 2.0)[0][0]
        assert snap.value == pytest.approx(0.5, rel=0.05)

    def test_warning_at_or_above_alpha(self):
        e = ens(np.ones((3, 1)))
        with pytest.warns(RuntimeWarning):
            est = estimate_moment(e, 1.5, alpha=1.5)
        assert est.warning is not None
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert estimate_moment(e, 0.75, alpha=1.5).warning is None
            assert estimate_moment(e, 4.0, alpha=2.0).warning is None

    def test_excess_moment_of_deterministic_decay(self):
        m = explicit_model(1.5, [1.0, 4.0])
        times = [0.0, 0.5, 1.0, 2.0]
        vals, errs = excess_moment_curve(m, 10.0, PathConfig(0.01, 2.0), times, 5, 1, 0.75)
        np.testing.assert_allclose(vals, (10.0 * np.exp(-np.array(times))) ** 0.75, rtol=1e-12)
        np.testing.assert_allclose(errs, 0.0, atol=1e-12)


class TestInvariant:
    def test_ou_burn_in_converges(self, ou_model):
        out = estimate_invariant(ou_model, PathConfig(0.1, 10.0), 10_000, 10.0, 4)
        prov = out.provenance
        assert prov["converged"]
        assert prov["diagnostic_tv"] < 3 / math.sqrt(10_000)
        assert out.time == pytest.approx(10.0)
        assert np.var(out.samples[:, 0]) == pytest.approx(0.5, rel=0.05)

    def test_no_noise_no_drift_is_point_mass(self):
        m = explicit_model(1.5, [1.0, 2.0])
        out = estimate_invariant(m, PathConfig(0.1, 5.0), 100, 5.0, 1)
        assert out.provenance["diagnostic_tv"] == 0.0
        assert np.all(out.samples == 0.0)

    def test_short_burn_in_is_flagged(self, ou_model):
        out = estimate_invariant(ou_model, PathConfig(0.1, 10.0), 10_000, 0.01, 4, x=5.0)
        assert not out.provenance["converged"]

    def test_per_path_starts(self, heat_model):
        X = np.zeros((50, heat_model.n_modes))
        X[:, 0] = np.linspace(-5, 5, 50)
        out = estimate_invariant(heat_model, PathConfig(0.05, 1.0), 50, 1.0, 2, x=X)
        assert out.m_paths == 50


class TestConvergenceExperiment:
    def test_small_ou_run(self, ou_model):
        rep = convergence_experiment(ou_model, [0.0, 4.0], [0.5, 1.0, 1.5, 2.0, 2.5], 5000, 9,
                                     config=PathConfig(0.5, 2.5))
        assert isinstance(rep, ConvergenceReport)
        assert rep.x_norms == [0.0, 4.0]
        assert rep.floor >= noise_floor(5000)
        assert rep.floor >= 2 * rep.null_tv
        assert isinstance(rep.fits[1], RateFit) and rep.fits[1].beta > 0
        rows = rep.rows()
        assert len(rows) == 10
        assert set(rows[0]) == {"x_norm", "t", "tv", "tv_stderr_proxy", "beta", "log_c", "r2"}
        # the far start is farther from equilibrium at every time
        assert all(far.value > near.value for near, far in zip(rep.tv[0], rep.tv[1]))
        assert "|x|=4" in rep.summary()
        assert rep.lambda_1 == 1.0 and "beta/lambda_1=" in rep.summary()

    def test_stationary_start_stays_near_reference(self, ou_model):
        # the law from 0 is already within a few percent of equilibrium once t >= 2
        rep = convergence_experiment(ou_model, [0.0], [2.0, 3.0, 4.0, 5.0], 10_000, 9,
                                     config=PathConfig(0.1, 5.0))
        assert all(e.value < 3 * noise_floor(10_000) for e in rep.tv[0])

    def test_insufficient_data_is_reported_per_start(self, ou_model):
        rep = convergence_experiment(ou_model, [0.0], [5.0, 6.0, 7.0], 2000, 9,
                                     config=PathConfig(0.5, 7.0))
        assert rep.fits[0] is None
        assert "noise floor" in rep.errors[0]
        assert math.isnan(rep.rows()[0]["beta"])

    def test_deterministic(self, heat_model):
        args = (heat_model, [0.0, 3.0], [0.5, 1.0, 1.5], 500, 4)
        a = convergence_experiment(*args, config=PathConfig(0.05, 1.5))
        b = convergence_experiment(*args, config=PathConfig(0.05, 1.5), n_jobs=2)
        assert [r["tv"] for r in a.rows()] == [r["tv"] for r in b.rows()]
        assert a.null_tv == b.null_tv
