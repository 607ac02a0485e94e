"""Estimator tests: sample moments, single fits, rolling windows, and the
residual whiteness statistic.

Recovery tolerances follow the estimator's sampling error in the
identifiable region (|rho + delta| >= 0.2, N = 10^4 -> +/- 0.07).  On
white noise the AR and MA roots cancel and the individual coefficients
are not identified; tests there assert the weak-identification flag and
moment-level facts instead of point values.
"""

import math

import numpy as np
import pytest

from optinformed import (
    ArmaParams,
    ConfigError,
    DataInputError,
    DegenerateDataError,
    InsufficientDataError,
    fit_arma11,
    ljung_box,
    rolling_fit,
    sample_autocovariance,
    simulate_arma11,
    theoretical_autocovariance,
)

# scipy.stats.chi2.ppf(0.999, 10); residual autocorrelation statistic at 10
# lags stays below this on a correctly specified model
CHI2_10_Q999 = 29.58829844507442


def _arma(rho, delta, gamma=0.0, sigma_eps2=1.0):
    return ArmaParams(gamma=gamma, rho=rho, delta=delta, sigma_eps2=sigma_eps2)


class TestSampleAutocovariance:
    def test_constant_series(self):
        assert sample_autocovariance([1.0, 1.0, 1.0, 1.0], 0) == 0.0

    def test_perfect_alternation(self):
        assert sample_autocovariance([1.0, -1.0, 1.0, -1.0], 1) == -1.0

    def test_long_simulation_matches_formula(self):
        x = simulate_arma11(_arma(0.6, -0.3), 1_000_000, seed=55)
        v0 = theoretical_autocovariance(_arma(0.6, -0.3), 0)
        assert sample_autocovariance(x, 0) == pytest.approx(v0, abs=0.01)

    def test_validation(self):
        with pytest.raises(DataInputError):
            sample_autocovariance([], 0)
        with pytest.raises(DataInputError):
            sample_autocovariance([[1.0, 2.0]], 0)
        with pytest.raises(DataInputError):
            sample_autocovariance([1.0, float("nan")], 0)
        with pytest.raises(ValueError):
            sample_autocovariance([1.0, 2.0, 3.0], 3)
        with pytest.raises(ValueError):
            sample_autocovariance([1.0, 2.0, 3.0], -1)


class TestFit:
    def test_recovers_planted_parameters(self):
        x = simulate_arma11(_arma(0.6, -0.3), 10_000, seed=101)
        fit = fit_arma11(x)
        assert fit.converged
        assert not fit.weak_identification
        assert fit.params.rho == pytest.approx(0.6, abs=0.07)
        assert fit.params.delta == pytest.approx(-0.3, abs=0.07)
        assert fit.params.sigma_eps2 == pytest.approx(1.0, rel=0.1)

    def test_negative_persistence(self):
        x = simulate_arma11(_arma(-0.5, 0.3), 10_000, seed=103)
        fit = fit_arma11(x)
        assert fit.params.rho == pytest.approx(-0.5, abs=0.07)
        assert fit.params.delta == pytest.approx(0.3, abs=0.07)

    def test_fit_invariants(self):
        x = simulate_arma11(_arma(0.4, 0.2), 500, seed=7)
        fit = fit_arma11(x)
        assert fit.residuals.shape == (499,)
        assert fit.window_start == 0
        assert abs(fit.params.rho) < 1.0
        assert abs(fit.params.delta) <= 1.0
        assert fit.params.sigma_eps2 == fit.objective / 499
        # objective really is the sum of squares of the reported residuals
        assert fit.objective == pytest.approx(float(fit.residuals @ fit.residuals),
                                              rel=1e-12)

    def test_white_noise_flags_weak_identification(self):
        # i.i.d. data: the fitted roots nearly cancel, individual signs are
        # meaningless, but the implied variance must still match the data.
        x = np.random.default_rng(5).standard_normal(10_000)
        fit = fit_arma11(x)
        assert abs(fit.params.rho + fit.params.delta) < 0.1
        assert fit.weak_identification
        v0 = theoretical_autocovariance(fit.params, 0)
        assert v0 == pytest.approx(float(np.var(x)), rel=0.05)

    def test_deterministic(self):
        x = simulate_arma11(_arma(0.6, -0.3), 300, seed=11)
        a, b = fit_arma11(x), fit_arma11(x)
        assert a.params == b.params
        assert np.array_equal(a.residuals, b.residuals)

    def test_errors(self):
        with pytest.raises(DegenerateDataError):
            fit_arma11(np.full(50, 2.0))
        with pytest.raises(InsufficientDataError):
            fit_arma11(np.zeros(19))
        bad = np.ones(50)
        bad[30] = float("nan")
        with pytest.raises(DataInputError, match="index 30"):
            fit_arma11(bad)
        with pytest.raises(DataInputError):
            fit_arma11(np.ones((10, 10)))


class TestRollingFit:
    def test_single_window(self):
        x = simulate_arma11(_arma(0.5, -0.2), 21, seed=1)
        fits = rolling_fit(x, 20)
        assert len(fits) == 1
        assert fits[0].window_start == 0

    def test_count_arithmetic(self):
        x = simulate_arma11(_arma(0.5, -0.2), 31, seed=2)
        fits = rolling_fit(x, 20)
        assert len(fits) == 11
        assert [f.window_start for f in fits] == list(range(11))

    def test_length_equal_to_window_yields_nothing(self):
        x = simulate_arma11(_arma(0.5, -0.2), 25, seed=3)
        assert rolling_fit(x, 25) == []

    def test_matches_independent_fits(self):
        x = simulate_arma11(_arma(0.6, -0.3), 60, seed=17)
        fits = rolling_fit(x, 25)
        assert len(fits) == 35
        for k, fit in enumerate(fits):
            solo = fit_arma11(x[k:k + 26], window_start=k)
            assert fit.params == solo.params
            assert fit.objective == solo.objective
            assert fit.converged == solo.converged
            assert np.array_equal(fit.residuals, solo.residuals)

    def test_constant_window_placeholder(self):
        # A flat stretch inside the series must not abort the sweep.
        x = np.concatenate([np.full(30, 1.0),
                            simulate_arma11(_arma(0.3, 0.1), 30, seed=4)])
        fits = rolling_fit(x, 25)
        assert len(fits) == 35
        flat = fits[0]
        assert not flat.converged
        assert flat.params.rho == 0.0 and flat.params.delta == 0.0
        assert flat.params.sigma_eps2 == 0.0

    def test_regime_change_shows_up_across_windows(self):
        # First half i.i.d., second half ARMA(-0.5, 0.3).  On the white
        # half the coefficients are unidentified (near cancellation, so the
        # flag fires everywhere and point values scatter); windows inside
        # the structured half average near the planted AR coefficient and
        # their sums satisfy the sign pattern of a negative-persistence
        # regime.
        half, m = 2400, 1200
        first = np.random.default_rng(3002).standard_normal(half)
        second = simulate_arma11(_arma(-0.5, 0.3), half, seed=4002)
        fits = rolling_fit(np.concatenate([first, second]), m)
        assert len(fits) == 2 * half - m
        in_first = fits[:half - m]
        assert all(f.weak_identification for f in in_first)
        in_second = fits[half:]
        rhos = np.array([f.params.rho for f in in_second])
        deltas = np.array([f.params.delta for f in in_second])
        assert float(rhos.mean()) == pytest.approx(-0.5, abs=0.25)
        assert 0.0 < float(deltas.mean()) < 0.6
        sum_rho, sum_delta = float(rhos.sum()), float(deltas.sum())
        assert sum_rho < 0.0 < sum_delta
        assert abs(sum_rho) > abs(sum_delta)

    def test_dispersion_shrinks_with_window_length(self):
        x = simulate_arma11(_arma(0.6, -0.3), 3000, seed=404)
        spreads = []
        for m in (50, 200, 800):
            rhos = [f.params.rho for f in rolling_fit(x, m)]
            spreads.append(float(np.std(rhos)))
        assert spreads[0] > spreads[1] > spreads[2]

    def test_validation(self):
        x = simulate_arma11(_arma(0.5, -0.2), 100, seed=9)
        with pytest.raises(ConfigError):
            rolling_fit(x, 19)
        with pytest.raises(ConfigError):
            rolling_fit(x, 50.0)
        with pytest.raises(InsufficientDataError):
            rolling_fit(x, 101)


class TestLjungBox:
    def test_white_residuals_not_extreme(self):
        x = simulate_arma11(_arma(0.6, -0.3), 10_000, seed=31)
        fit = fit_arma11(x)
        assert ljung_box(fit.residuals, lags=10) < CHI2_10_Q999

    def test_misspecification_is_flagged(self):
        # Raw AR(1) data fed in as "residuals" carries obvious serial
        # correlation, so the statistic must blow past the null quantile.
        rng = np.random.default_rng(33)
        y = np.empty(2000)
        prev = 0.0
        for t in range(2000):
            prev = 0.8 * prev + rng.standard_normal()
            y[t] = prev
        assert ljung_box(y, lags=10) > 100.0 * CHI2_10_Q999 / 10.0

    def test_statistic_is_scale_free(self):
        e = np.random.default_rng(35).standard_normal(500)
        assert ljung_box(3.0 * e) == pytest.approx(ljung_box(e), rel=1e-12)

    def test_validation(self):
        with pytest.raises(InsufficientDataError):
            ljung_box(np.zeros(10), lags=10)
        with pytest.raises(DegenerateDataError):
            ljung_box(np.full(50, 1.0))
