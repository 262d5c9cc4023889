import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyergo.drift import DriftSpec
from levyergo.exceptions import ParameterError, StructuralError, UsageError
from levyergo.spectral_model import (CONDITION_IDS, PowerLawSpec, build_model,
                                     check_drift_vector, check_gamma_bound,
                                     check_gaussian_trace, check_model,
                                     check_stable_nondegeneracy, check_stable_summability,
                                     check_strong_feller, explicit_model, model_from_dict,
                                     strong_feller_sup)


def spec(alpha=1.5, gamma=0.3, delta=0.5, **kw):
    return PowerLawSpec(alpha=alpha, gamma=gamma, delta=delta, **kw)


def grid_sup(e, delta, t, k_max=1000):
    k = np.arange(1, k_max + 1, dtype=float)
    vals = np.sqrt(k ** e / k ** delta) * np.exp(-k ** e * t)
    return float(vals.max()), int(np.argmax(vals)) + 1


class TestStableSummability:
    def test_below_bound_passes(self):
        entry = check_stable_summability(spec(gamma=0.5))
        assert entry.passed
        assert entry.exponent == pytest.approx(-1.25)

    def test_above_bound_fails(self):
        entry = check_stable_summability(spec(gamma=1.0))
        assert not entry.passed
        assert entry.exponent == pytest.approx(-0.5)

    def test_harmonic_boundary_fails(self):
        entry = check_stable_summability(spec(alpha=1.0, gamma=1.0))
        assert not entry.passed
        # the witness is the harmonic partial sum, which grows like log n
        n = 100_000
        assert entry.witness == pytest.approx(math.log(n) + np.euler_gamma, abs=1e-4)

    def test_mask_restricts_the_sum(self):
        full = check_stable_summability(spec(gamma=0.0), n_terms=10)
        masked = check_stable_summability(spec(gamma=0.0, mask_period=2), n_terms=10)
        k = np.arange(2, 11, 2, dtype=float)
        assert masked.witness == pytest.approx(np.sum(1.0 / k ** 2))
        assert masked.witness < full.witness

    def test_explicit_model_is_truncation_trivial(self):
        m = explicit_model(1.5, [1.0, 4.0], b=[1.0, 2.0])
        entry = check_stable_summability(m)
        assert entry.passed and "truncation-trivial" in entry.detail
        assert entry.witness == pytest.approx(1.0 + 2.0 ** 1.5 / 4.0)


class TestGammaBound:
    def test_pass(self):
        assert check_gamma_bound(spec(gamma=0.5)).passed

    def test_equality_fails(self):
        assert not check_gamma_bound(spec(gamma=1 / 1.5)).passed

    def test_small_alpha(self):
        assert check_gamma_bound(spec(alpha=0.5, gamma=1.9)).passed

    def test_generalized_exponent_is_reported(self):
        entry = check_gamma_bound(spec(gamma=0.5, lambda_exponent=3.0))
        assert entry.passed and "generalized" in entry.detail
        assert entry.witness == pytest.approx(2 / 1.5)


class TestGaussianTrace:
    @pytest.mark.parametrize("delta,ok", [(0.5, True), (1.0, False), (-3.0, True), (1.5, False)])
    def test_examples(self, delta, ok):
        entry = check_gaussian_trace(spec(delta=delta))
        assert entry.passed is ok
        assert entry.exponent == pytest.approx(delta - 2)


class TestDriftVector:
    def test_constant_components_sum_to_pi_squared_over_six(self):
        entry = check_drift_vector(0.0)
        assert entry.passed
        assert entry.witness == pytest.approx(math.pi ** 2 / 6, abs=1e-4)

    def test_linear_growth_fails(self):
        assert not check_drift_vector(1.0).passed

    def test_boundary_power_half_fails(self):
        assert not check_drift_vector(0.5).passed
        assert check_drift_vector(0.49).passed

    def test_explicit_list(self):
        entry = check_drift_vector([3, -2, 0.5])
        assert entry.passed
        assert entry.witness == pytest.approx(9 + 1 + 0.25 / 9)
        assert entry.witness == pytest.approx(10.028, abs=1e-3)

    def test_none_means_no_forcing(self):
        entry = check_drift_vector(None)
        assert entry.passed and entry.witness == 0.0


class TestNondegeneracy:
    def test_zero_gamma_passes_with_theta_two_thirds(self):
        entry = check_stable_nondegeneracy(spec(gamma=0.0))
        assert entry.passed
        assert entry.witness == pytest.approx(1 / 1.5)

    def test_negative_gamma_fails(self):
        entry = check_stable_nondegeneracy(spec(gamma=-1.0))
        assert not entry.passed
        assert entry.witness == pytest.approx(1 / 1.5 + 0.5)

    def test_sparse_mask_is_degenerate(self):
        entry = check_stable_nondegeneracy(spec(mask_period=2))
        assert not entry.passed
        assert "degenerate noise" in entry.detail

    def test_boundary_theta_one_fails(self):
        # alpha = 1, gamma = 0 needs theta >= 1, outside the open interval
        assert not check_stable_nondegeneracy(spec(alpha=1.0, gamma=0.0)).passed


class TestStrongFeller:
    def test_heat_example_attained_at_two(self):
        entry = check_strong_feller(spec(delta=0.5), t=0.1)
        assert entry.passed
        assert entry.witness == pytest.approx(2 ** 0.75 * math.exp(-0.4))
        assert entry.witness == pytest.approx(1.127, abs=1e-3)
        oracle, k = grid_sup(2.0, 0.5, 0.1)
        assert entry.witness == pytest.approx(oracle, rel=1e-12)
        assert k == 2

    def test_delta_two_is_decreasing(self):
        entry = check_strong_feller(spec(delta=2.0), t=1.0)
        assert entry.passed
        assert entry.witness == pytest.approx(math.exp(-1.0))

    def test_zero_q_fails(self):
        m = explicit_model(1.5, [1.0, 4.0], b=[1.0, 1.0], q=[1.0, 0.0])
        entry = check_strong_feller(m)
        assert not entry.passed and "degenerate" in entry.detail

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_nonpositive_time_rejected(self, t):
        with pytest.raises(ParameterError):
            check_strong_feller(spec(), t=t)

    @settings(max_examples=60, deadline=None)
    @given(e=st.floats(1.0, 3.0), delta=st.floats(-2.0, 2.0), t=st.floats(0.05, 5.0))
    def test_integer_sup_matches_grid(self, e, delta, t):
        val, k = strong_feller_sup(e, delta, t)
        oracle, _ = grid_sup(e, delta, t)
        assert val == pytest.approx(oracle, rel=1e-9)


class TestBuildModel:
    def test_heat_values(self):
        s = PowerLawSpec(alpha=1.5, gamma=0.3, delta=0.5, a_rule=-1.0)
        m = build_model(s, 4)
        np.testing.assert_allclose(m.lam, [1, 4, 9, 16])
        np.testing.assert_allclose(m.b, [1, 2 ** 0.3, 3 ** 0.3, 4 ** 0.3])
        np.testing.assert_allclose(m.b, [1, 1.231, 1.390, 1.516], atol=1e-3)
        np.testing.assert_allclose(m.q, [1, 1.414, 1.732, 2], atol=1e-3)
        np.testing.assert_allclose(m.a, [1, 0.5, 1 / 3, 0.25])
        assert m.report.passed
        assert m.report.conditions == list(CONDITION_IDS)

    def test_single_mode(self):
        m = build_model(spec(), 1)
        assert m.n_modes == 1 and m.report.passed

    def test_inadmissible_model_still_builds(self):
        m = build_model(spec(gamma=1.0), 5)
        assert not m.report.passed
        assert not m.report["stable_summability"].passed
        assert not m.report["gamma_bound"].passed

    def test_mask_zeroes_off_mask_modes(self):
        m = build_model(spec(mask_period=3), 7)
        np.testing.assert_array_equal(m.b == 0, [True, True, False, True, True, False, True])

    def test_zero_modes_rejected(self):
        with pytest.raises(StructuralError):
            build_model(spec(), 0)

    def test_arrays_are_read_only(self):
        m = build_model(spec(), 3)
        with pytest.raises(ValueError):
            m.lam[0] = 5.0

    def test_only_applicable_checks_run(self):
        pure_stable = build_model(PowerLawSpec(alpha=1.5, gamma=0.3), 3)
        assert pure_stable.report.conditions == [
            "stable_summability", "gamma_bound", "drift_vector", "stable_nondegeneracy"]
        pure_gauss = build_model(PowerLawSpec(alpha=1.5, delta=0.5), 3)
        assert pure_gauss.report.conditions == ["gaussian_trace", "drift_vector",
                                                "strong_feller"]


class TestStructural:
    @pytest.mark.parametrize("lam", [[0.0, 1.0], [-1.0], [2.0, 1.0], []])
    def test_bad_eigenvalues(self, lam):
        with pytest.raises(StructuralError):
            explicit_model(1.5, lam)

    def test_length_mismatch(self):
        with pytest.raises(StructuralError):
            explicit_model(1.5, [1.0, 2.0], b=[1.0])

    def test_negative_noise_coefficient(self):
        with pytest.raises(ParameterError):
            explicit_model(1.5, [1.0], q=[-1.0])


class TestFromDict:
    def test_power_law(self):
        m = model_from_dict({"n_modes": 4, "alpha": 1.5, "gamma": 0.3, "delta": 0.5,
                             "a_rule": {"power": -1}})
        assert m.source is not None
        np.testing.assert_allclose(m.a, [1, 0.5, 1 / 3, 0.25])

    def test_explicit_lists(self):
        m = model_from_dict({"alpha": 2.0, "lambda": [1.0, 2.0], "q": [1.0, 1.0],
                             "drift": {"kind": "constant", "params": {"value": [1.0, 0.0]}}})
        assert m.source is None and m.n_modes == 2
        np.testing.assert_array_equal(m.drift.evaluate(np.zeros((1, 2))), [[1.0, 0.0]])

    @pytest.mark.parametrize("data,fragment", [
        ({"n_modes": 2, "alpha": 1.5, "gamma": 0.3, "colour": 1}, "unknown field"),
        ({"n_modes": 2, "alpha": 1.5, "gamma": 0.3, "b": [1, 1]}, "either gamma or b"),
        ({"n_modes": 2, "gamma": 0.3}, "model.alpha"),
        ({"alpha": 1.5, "gamma": 0.3}, "model.n_modes"),
        ({"n_modes": 3, "alpha": 1.5, "lambda": [1, 2]}, "disagrees"),
        ({"n_modes": 2, "alpha": 1.5, "a_rule": {"pow": 1}}, "model.a_rule"),
        ([1, 2], "expected an object"),
    ])
    def test_errors_name_the_field(self, data, fragment):
        with pytest.raises(UsageError, match=fragment):
            model_from_dict(data)

    def test_fingerprint_is_stable(self):
        d = {"n_modes": 3, "alpha": 1.5, "gamma": 0.3, "delta": 0.5}
        assert model_from_dict(d).fingerprint() == model_from_dict(dict(d)).fingerprint()
        d2 = dict(d, delta=0.4)
        assert model_from_dict(d).fingerprint() != model_from_dict(d2).fingerprint()


alphas = st.floats(0.2, 1.99)
gammas = st.floats(-3.0, 3.0)


@settings(max_examples=100, deadline=None)
@given(alpha=alphas, gamma=gammas)
def test_summability_agrees_with_gamma_bound_for_heat_family(alpha, gamma):
    s = PowerLawSpec(alpha=alpha, gamma=gamma)
    assert check_stable_summability(s, n_terms=10).passed == check_gamma_bound(s).passed


@settings(max_examples=50, deadline=None)
@given(alpha=alphas, gamma=gammas, delta=st.floats(-3.0, 0.99),
       n=st.integers(1, 40), extra=st.integers(1, 40))
def test_partial_sums_monotone_in_truncation(alpha, gamma, delta, n, extra):
    s = PowerLawSpec(alpha=alpha, gamma=gamma, delta=delta)
    for check in (check_stable_summability, check_gaussian_trace):
        assert check(s, n_terms=n).witness <= check(s, n_terms=n + extra).witness
    small, large = build_model(s, n), build_model(s, n + extra)
    assert check_stable_summability(small).witness <= check_stable_summability(large).witness


@settings(max_examples=30, deadline=None)
@given(alpha=alphas, gamma=gammas, delta=st.floats(-3.0, 3.0), n=st.integers(1, 30))
def test_build_is_deterministic_and_reports_six_conditions(alpha, gamma, delta, n):
    s = PowerLawSpec(alpha=alpha, gamma=gamma, delta=delta, a_rule=0.0,
                     drift=DriftSpec.saturating(c_f=1.0))
    m1, m2 = build_model(s, n), build_model(s, n)
    assert m1.fingerprint() == m2.fingerprint()
    assert m1.report == m2.report
    assert sorted(m1.report.conditions) == sorted(CONDITION_IDS)
    assert m1.report.passed == all(e.passed for e in m1.report)


def test_check_model_on_explicit_model_has_no_gamma_entry():
    m = explicit_model(1.5, [1.0, 4.0], b=[1.0, 1.0], q=[1.0, 1.0])
    report = check_model(m)
    assert "gamma_bound" not in report
    assert report.passed


def test_report_table_lists_each_condition_once():
    table = build_model(spec(), 3).report.as_table()
    for cid in CONDITION_IDS:
        assert sum(line.startswith(cid + " ") for line in table.splitlines()) == 1
    assert table.splitlines()[-1] == "overall: pass"
