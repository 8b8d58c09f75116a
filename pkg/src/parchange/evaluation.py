"""Forecast accuracy and residual diagnostics for fitted segmented PAR models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import ConfigError, DiagnosticsError, DomainError, FitReport, PeriodicSeries

MAPE_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class ForecastReport:
    """One-step-ahead forecasts of the held-out observations.

    ``mape`` is None when an actual value is too close to zero.  The
    ``natural_*`` fields are only filled when the model was fitted on
    log-transformed data.
    """

    times: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    rmse: float
    mae: float
    mape: float | None
    natural_actual: np.ndarray | None = None
    natural_predicted: np.ndarray | None = None
    natural_rmse: float | None = None
    natural_mae: float | None = None
    natural_mape: float | None = None


@dataclass(frozen=True)
class SegmentDiagnostics:
    segment: int
    first_year: int
    last_year: int
    acf: np.ndarray  # (s, L): acf[k - 1, l - 1] = r_l(k)
    Q: np.ndarray
    df: np.ndarray
    p_values: np.ndarray


@dataclass(frozen=True)
class DiagnosticsReport:
    lag: int
    acf_lags: int
    pooled_acf: np.ndarray
    band: float
    segments: tuple[SegmentDiagnostics, ...]


def accuracy_measures(y, yhat):
    """RMSE, MAE and MAPE (in percent) of ``yhat`` against ``y``."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise DomainError("actual and predicted values must be equal-length, non-empty vectors")
    err = y - yhat
    # scaling first keeps tiny errors from underflowing when squared
    scale = float(np.max(np.abs(err)))
    rmse = scale * float(np.sqrt(np.sum((err / scale) ** 2) / y.size)) if scale > 0 else 0.0
    mae = float(np.sum(np.abs(err)) / y.size)
    if np.any(np.abs(y) < MAPE_ZERO_TOL):
        mape = None
    else:
        mape = float(np.sum(np.abs(err) / np.abs(y)) / y.size * 100.0)
    return rmse, mae, mape


def adjusted_values(report: FitReport, x: np.ndarray) -> np.ndarray:
    """Trend- and mean-adjusted series under the fitted models.

    Times past the fitted span use the last regime's parameters.
    """
    s = report.period
    t = np.arange(1, x.size + 1, dtype=float)
    season = (np.arange(x.size) % s)
    which = np.full(x.size, len(report.models) - 1)
    for j, mdl in enumerate(report.models):
        which[(mdl.first_year - 1) * s : mdl.last_year * s] = j
    a = np.array([m.a for m in report.models])[which]
    b = np.array([m.b for m in report.models])[which]
    mu = np.array([m.mu for m in report.models])[which, season]
    return x - a - b * t - mu


def one_step_forecasts(
    report: FitReport,
    full: PeriodicSeries,
    holdout_years: int = 1,
    transform: str = "none",
) -> ForecastReport:
    """Forecast each held-out value from actual data up to the previous step."""
    s = full.period
    if holdout_years < 1 or holdout_years >= full.N:
        raise ConfigError(f"holdout of {holdout_years} years does not fit {full.N} years")
    if report.segmentation.N != full.N - holdout_years:
        raise ConfigError(
            f"model was fitted on {report.segmentation.N} years, expected {full.N - holdout_years}"
        )
    if not report.models:
        raise ConfigError("cannot forecast from an infeasible fit")
    x = full.values
    Y = adjusted_values(report, x)
    last = report.models[-1]
    p = last.phi.shape[1]
    T_fit = report.segmentation.N * s
    times = np.arange(T_fit + 1, full.T + 1)
    pred = np.empty(times.size)
    for r, t in enumerate(times):
        k = (t - 1) % s
        lags = np.array([Y[t - 1 - i] if t - i >= 1 else 0.0 for i in range(1, p + 1)])
        pred[r] = last.a + last.b * t + last.mu[k] + last.phi[k] @ lags
    actual = x[times - 1]
    rmse, mae, mape = accuracy_measures(actual, pred)
    natural = {}
    if transform == "log":
        na, npred = np.exp(actual), np.exp(pred)
        n_rmse, n_mae, n_mape = accuracy_measures(na, npred)
        natural = dict(
            natural_actual=na,
            natural_predicted=npred,
            natural_rmse=n_rmse,
            natural_mae=n_mae,
            natural_mape=n_mape,
        )
    return ForecastReport(times, actual, pred, rmse, mae, mape, **natural)


def chi2_survival(x: float, df: float) -> float:
    """Upper tail ``P(chi2_df > x)`` via the regularized incomplete gamma function."""
    if not df >= 1:
        raise DomainError(f"degrees of freedom must be at least 1, got {df}")
    if x < 0:
        raise DomainError(f"chi-square statistic must be nonnegative, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def pooled_acf(residuals, max_lag: int):
    """Sample ACF (biased denominator) of residuals with NaNs removed.

    Returns the autocorrelations at lags ``1..max_lag`` and the half-width of
    the 95% white-noise band.
    """
    e = np.asarray(residuals, dtype=float)
    e = e[np.isfinite(e)]
    n = e.size
    if n <= max_lag:
        raise DiagnosticsError(f"{n} residuals cannot support {max_lag} lags")
    e = e - e.mean()
    c0 = e @ e / n
    if c0 <= 0:
        raise DiagnosticsError("residuals have zero variance")
    r = np.array([e[l:] @ e[:-l] / n / c0 for l in range(1, max_lag + 1)])
    return r, 1.96 / np.sqrt(n)


def seasonal_acf(residuals, s: int, max_lag: int) -> np.ndarray:
    """Periodic residual autocorrelations ``r_l(k)`` of one segment.

    ``residuals`` covers whole years of the segment (NaN where undefined).
    Each season is centred, ``c_l(k) = N^-1 sum_n e_t e_{t-l}`` over the
    pairs available inside the segment and
    ``r_l(k) = c_l(k) / sqrt(c_0(k) c_0(k - l))``.
    """
    e = np.asarray(residuals, dtype=float)
    if e.size % s:
        raise DomainError("segment residuals must cover whole years")
    if np.isfinite(e).sum() <= max_lag:
        raise DiagnosticsError(f"too few residuals for {max_lag} lags")
    N = e.size // s
    block = e.reshape(N, s)
    block = block - np.nanmean(block, axis=0)
    c0 = np.nansum(block**2, axis=0) / N
    if np.any(c0 <= 0) or not np.all(np.isfinite(c0)):
        raise DiagnosticsError("a season has zero residual variance")
    flat = block.reshape(-1)
    r = np.zeros((s, max_lag))
    for k in range(s):
        t = np.arange(k, flat.size, s)
        for l in range(1, max_lag + 1):
            tt = t[t - l >= 0]
            prod = flat[tt] * flat[tt - l]
            c = np.nansum(prod) / N
            r[k, l - 1] = c / np.sqrt(c0[k] * c0[(k - l) % s])
    return r


def portmanteau(r_k, k: int, L: int, N: int, s: int, pk: int = 0):
    """Periodic Ljung-Box statistic for season ``k`` and its p-value.

    ``Q = N * sum_{l=1..L} N / (N - floor((l - k + s) / s)) * r_l(k)**2``
    referred to a chi-square with ``L - pk`` degrees of freedom.
    """
    if L <= pk:
        raise DomainError(f"lag {L} leaves no degrees of freedom after {pk} fitted lags")
    r_k = np.asarray(r_k, dtype=float)[:L]
    l = np.arange(1, L + 1)
    denom = N - np.floor((l - k + s) / s)
    if np.any(denom <= 0):
        raise DomainError(f"{N} years are too few for lag {L}")
    Q = float(N * np.sum(N / denom * r_k**2))
    return Q, chi2_survival(Q, L - pk)


def diagnose(report: FitReport, lag: int = 15, acf_lags: int = 36) -> DiagnosticsReport:
    """Per-segment portmanteau tests and the pooled residual ACF."""
    s = report.period
    pooled, band = pooled_acf(report.residuals, acf_lags)
    segs = []
    for j, mdl in enumerate(report.models, start=1):
        e = report.residuals[(mdl.first_year - 1) * s : mdl.last_year * s]
        N = mdl.last_year - mdl.first_year + 1
        r = seasonal_acf(e, s, lag)
        pk = mdl.delta.sum(axis=1)
        Q = np.empty(s)
        pv = np.empty(s)
        for k in range(1, s + 1):
            Q[k - 1], pv[k - 1] = portmanteau(r[k - 1], k, lag, N, s, int(pk[k - 1]))
        segs.append(SegmentDiagnostics(j, mdl.first_year, mdl.last_year, r, Q, lag - pk, pv))
    return DiagnosticsReport(lag, acf_lags, pooled, float(band), tuple(segs))
