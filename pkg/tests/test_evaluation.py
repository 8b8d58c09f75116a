import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parchange.core import ConfigError, DiagnosticsError, DomainError, PeriodicSeries, Segmentation
from parchange.criterion import CriterionConfig, score_candidate
from parchange.evaluation import (
    accuracy_measures,
    chi2_survival,
    diagnose,
    one_step_forecasts,
    pooled_acf,
    portmanteau,
    seasonal_acf,
)
from parchange.generator import GeneratorSpec, RegimeParams, generate
from parchange.optimizer import fit_to_report


def oracle_measures(y, yhat):
    n = len(y)
    sq = ab = rel = 0.0
    for a, b in zip(y, yhat):
        sq += (a - b) ** 2
        ab += abs(a - b)
        rel += abs(a - b) / abs(a)
    return math.sqrt(sq / n), ab / n, 100.0 * rel / n


class TestAccuracy:
    def test_hand_example(self):
        rmse, mae, mape = accuracy_measures([1.0, 2.0], [2.0, 4.0])
        assert abs(mae - 1.5) < 1e-12 and abs(rmse - math.sqrt(2.5)) < 1e-12 and abs(mape - 100.0) < 1e-12

    def test_perfect(self):
        assert accuracy_measures([1.0, 3.0], [1.0, 3.0]) == (0.0, 0.0, 0.0)

    def test_constant_error(self):
        rmse, mae, _ = accuracy_measures(np.arange(1.0, 13.0), np.arange(1.0, 13.0) + 0.25)
        assert rmse == pytest.approx(0.25, abs=1e-15) and mae == pytest.approx(0.25, abs=1e-15)

    def test_zero_actual(self):
        rmse, mae, mape = accuracy_measures([0.0, 1.0], [1.0, 1.0])
        assert mape is None and mae == 0.5

    @pytest.mark.parametrize("seed", range(10))
    def test_against_loop_oracle(self, seed):
        r = np.random.default_rng(seed)
        y, yhat = r.uniform(1, 5, 12), r.uniform(1, 5, 12)
        got, want = accuracy_measures(y, yhat), oracle_measures(y, yhat)
        assert np.max(np.abs(np.array(got) - np.array(want))) < 1e-12

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=30))
    def test_rmse_dominates_mae(self, pairs):
        y, yhat = np.array(pairs).T
        rmse, mae, mape = accuracy_measures(y, yhat)
        assert rmse >= mae * (1 - 1e-12) >= 0
        assert mape is None or mape >= 0

    def test_bad_shapes(self):
        with pytest.raises(DomainError):
            accuracy_measures([1.0], [1.0, 2.0])


class TestAcf:
    def test_alternating(self):
        r, _ = pooled_acf(np.tile([1.0, -1.0], 100), 3)
        assert r[0] == pytest.approx(-1.0, abs=0.01) and r[1] == pytest.approx(1.0, abs=0.02)

    def test_mean_invariance(self, rng):
        e = rng.standard_normal(300)
        np.testing.assert_allclose(pooled_acf(e, 10)[0], pooled_acf(e + 7.5, 10)[0], atol=1e-12)

    def test_nan_entries_dropped(self, rng):
        e = rng.standard_normal(100)
        r_nan, band = pooled_acf(np.concatenate([[np.nan], e]), 5)
        np.testing.assert_array_equal(r_nan, pooled_acf(e, 5)[0])
        assert band == pytest.approx(1.96 / 10)

    def test_band_coverage(self):
        r = np.random.default_rng(21)
        inside = [np.abs(pooled_acf(r.standard_normal(1000), 36)[0]) < 1.96 / math.sqrt(1000) for _ in range(200)]
        assert 0.93 <= np.mean(inside) <= 0.97

    def test_degenerate(self):
        with pytest.raises(DiagnosticsError):
            pooled_acf(np.ones(50), 5)
        with pytest.raises(DiagnosticsError):
            pooled_acf(np.ones(5), 5)

    def test_seasonal_acf_bounded(self, rng):
        r = seasonal_acf(rng.standard_normal(12 * 30), 12, 15)
        assert r.shape == (12, 15) and np.all(np.abs(r) <= 1)

    def test_seasonal_acf_loop_oracle(self, rng):
        s, N, L = 3, 8, 4
        e = rng.standard_normal(s * N)
        e[0] = np.nan
        got = seasonal_acf(e, s, L)
        block = e.reshape(N, s)
        m = np.nanmean(block, axis=0)
        c0 = np.nansum((block - m) ** 2, axis=0) / N
        for k in range(s):
            for l in range(1, L + 1):
                total = 0.0
                for n in range(N):
                    t = n * s + k
                    if t - l < 0:
                        continue
                    a, b = e[t] - m[k], e[t - l] - m[(t - l) % s]
                    if np.isfinite(a) and np.isfinite(b):
                        total += a * b
                want = total / N / math.sqrt(c0[k] * c0[(k - l) % s])
                assert got[k, l - 1] == pytest.approx(want, abs=1e-12)


class TestPortmanteau:
    def test_zero_acf(self):
        assert portmanteau(np.zeros(15), 3, 15, 40, 12) == (0.0, 1.0)

    def test_hand_example(self):
        Q, _ = portmanteau([0.3], 1, 1, 10, 12)
        assert Q == pytest.approx(1.0, abs=1e-12)

    def test_no_degrees_of_freedom(self):
        with pytest.raises(DomainError):
            portmanteau(np.zeros(3), 1, 3, 10, 12, pk=3)

    def test_too_few_years(self):
        with pytest.raises(DomainError):
            portmanteau(np.zeros(30), 1, 30, 2, 12)


class TestChiSquare:
    def test_zero(self):
        assert chi2_survival(0.0, 7) == 1.0

    def test_df2_closed_form(self):
        assert abs(chi2_survival(2 * math.log(2), 2) - 0.5) < 1e-15
        for x in np.linspace(0, 40, 81):
            assert abs(chi2_survival(x, 2) - math.exp(-x / 2)) < 1e-12

    @pytest.mark.parametrize("x", [0.5, 3.0, 7.79, 14.0, 23.68, 29.14, 45.0])
    def test_df14_high_precision(self, x):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        want = float(mpmath.gammainc(7, x / 2, mpmath.inf, regularized=True))
        assert abs(chi2_survival(x, 14) - want) < 1e-10

    def test_invalid(self):
        with pytest.raises(DomainError):
            chi2_survival(1.0, 0)
        with pytest.raises(DomainError):
            chi2_survival(-1.0, 3)


def par1_spec(N, phi, sigma2, seed=0, s=4, a=1.0, b=0.01):
    mu = np.array([0.5, -0.5, -0.5, 0.5])[:s]
    regime = RegimeParams(a=a, b=b, mu=mu, phi=np.full((s, 1), phi), sigma2=np.full(s, sigma2))
    return GeneratorSpec(s, Segmentation(N), (regime,), seed=seed)


def fitted(series, holdout=1, p=1):
    train = series.head_years(series.N - holdout)
    fit = score_candidate(train, Segmentation(train.N), CriterionConfig(p=p))
    return fit_to_report(fit, train)


class TestForecast:
    def test_zero_noise_exact(self):
        series = generate(par1_spec(12, 0.0, 0.0))
        fc = one_step_forecasts(fitted(series), series, 1)
        np.testing.assert_allclose(fc.predicted, fc.actual, atol=1e-10)
        assert fc.rmse < 1e-10 and fc.mae < 1e-10 and fc.mape < 1e-8
        assert fc.times.tolist() == [45, 46, 47, 48]

    def test_one_step_uses_only_the_past(self, rng):
        series = generate(par1_spec(30, 0.6, 1.0, seed=4))
        report = fitted(series, holdout=2)
        base = one_step_forecasts(report, series, 2)
        x = series.values.copy()
        for cut in range(112, 120):
            bumped = x.copy()
            bumped[cut:] += rng.normal(0, 5, x.size - cut)
            fc = one_step_forecasts(report, PeriodicSeries(bumped, 4), 2)
            upto = cut - 111  # forecast r targets t = 113 + r and reads x[: t - 1]
            np.testing.assert_array_equal(fc.predicted[:upto], base.predicted[:upto])

    def test_natural_scale_block(self):
        series = generate(par1_spec(12, 0.3, 0.01, a=3.0, b=0.0))
        fc = one_step_forecasts(fitted(series), series, 1, transform="log")
        np.testing.assert_allclose(fc.natural_actual, np.exp(fc.actual))
        assert fc.natural_mae > 0

    def test_holdout_errors(self):
        series = generate(par1_spec(12, 0.0, 1.0))
        report = fitted(series)
        with pytest.raises(ConfigError):
            one_step_forecasts(report, series, 12)
        with pytest.raises(ConfigError):
            one_step_forecasts(report, series, 2)


class TestDiagnose:
    def test_report_shapes(self):
        series = generate(par1_spec(40, 0.5, 1.0, seed=8))
        dg = diagnose(fitted(series, holdout=0), lag=6, acf_lags=10)
        (sd,) = dg.segments
        assert sd.acf.shape == (4, 6) and sd.Q.shape == (4,)
        assert np.all((sd.p_values >= 0) & (sd.p_values <= 1))
        assert sd.df.tolist() == [6 - int(d) for d in fitted(series, holdout=0).models[0].delta.sum(axis=1)]

    def test_power_against_missing_lag(self):
        """True PAR(1) residuals tested after forcing every lag out."""
        from parchange.core import SubsetSpec

        rejected = total = 0
        for seed in range(20):
            series = generate(par1_spec(50, 0.6, 1.0, seed=seed))
            cfg = CriterionConfig(p=1)
            fit = score_candidate(series, Segmentation(50), cfg, SubsetSpec((np.zeros(4, int),), 1))
            dg = diagnose(fit_to_report(fit, series), lag=8, acf_lags=10)
            pv = dg.segments[0].p_values
            rejected += np.sum(pv < 0.05)
            total += pv.size
        assert rejected / total > 0.5
