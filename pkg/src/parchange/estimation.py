"""Analytic parameter estimation for a fixed segmentation.

Given the structural parameters, the remaining parameters follow in four
steps: a per-segment OLS trend, per-segment seasonal means of the detrended
data, a constrained least-squares fit of the PAR coefficients for every
(segment, season) cell, and the innovation variance of each cell.

Lags always reach back in absolute time on the adjusted series, so the
first rows of a segment borrow adjusted values from the previous one.  Rows
whose lags would fall before ``t = 1`` are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, EstimationError, Segmentation

RANK_TOL = 1e-10


@dataclass(frozen=True)
class DesignSystem:
    """Lagged regression for one (segment, season) cell.

    Row ``r`` of ``Z`` holds ``(Y[t-1], ..., Y[t-p])`` for the target
    ``target[r] = Y[t]`` with ``t = times[r]`` (1-based linear time).
    """

    Z: np.ndarray
    target: np.ndarray
    times: np.ndarray
    segment: int
    season: int

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    @property
    def n_rows(self) -> int:
        return self.Z.shape[0]


@dataclass(frozen=True)
class AdjustedSeries:
    a: np.ndarray
    b: np.ndarray
    mu: np.ndarray
    W: np.ndarray
    Y: np.ndarray


def _segment_slices(seg: Segmentation, s: int):
    b = seg.boundaries
    for j in range(1, seg.M + 1):
        yield j, slice((b[j - 1] - 1) * s, (b[j] - 1) * s)


def trend_ols(t, y):
    """Intercept and slope of the OLS line through ``(t, y)``."""
    t_bar = t.mean()
    dt = t - t_bar
    sxx = dt @ dt
    if sxx <= 0.0:
        raise EstimationError("trend needs at least two distinct time indices")
    slope = (dt @ (y - y.mean())) / sxx
    return y.mean() - slope * t_bar, slope


def fit_trend(x, seg: Segmentation, s: int):
    """Per-segment OLS of ``x[t]`` on ``(1, t)``.

    Returns intercepts ``a`` and slopes ``b`` (one per segment) and the
    detrended series ``W``.
    """
    x = np.asarray(x, dtype=float)
    if x.size != seg.N * s:
        raise DomainError(f"series length {x.size} does not match {seg.N} years of {s}")
    a = np.empty(seg.M)
    b = np.empty(seg.M)
    W = np.empty_like(x)
    t_all = np.arange(1, x.size + 1, dtype=float)
    for j, sl in _segment_slices(seg, s):
        t = t_all[sl]
        a[j - 1], b[j - 1] = trend_ols(t, x[sl])
        W[sl] = x[sl] - a[j - 1] - b[j - 1] * t
    return a, b, W


def seasonal_block_means(W_block, s: int):
    block = W_block.reshape(-1, s)
    mu = block.mean(axis=0)
    return mu, (block - mu).reshape(-1)


def seasonal_means(W, seg: Segmentation, s: int):
    """Per-segment seasonal means ``mu`` (shape ``(M, s)``) and ``Y = W - mu``."""
    W = np.asarray(W, dtype=float)
    mu = np.empty((seg.M, s))
    Y = np.empty_like(W)
    for j, sl in _segment_slices(seg, s):
        mu[j - 1], Y[sl] = seasonal_block_means(W[sl], s)
    return mu, Y


def adjust(x, seg: Segmentation, s: int) -> AdjustedSeries:
    a, b, W = fit_trend(x, seg, s)
    mu, Y = seasonal_means(W, seg, s)
    return AdjustedSeries(a, b, mu, W, Y)


def build_design(Y, seg: Segmentation, j: int, k: int, p: int, s: int) -> DesignSystem:
    if p < 1:
        raise DomainError(f"maximum order must be at least 1, got {p}")
    if not 1 <= k <= s:
        raise DomainError(f"season {k} outside 1..{s}")
    Y = np.asarray(Y, dtype=float)
    years = np.asarray(seg.segment_years(j))
    times = (years - 1) * s + k
    times = times[times - p >= 1]
    if times.size == 0:
        raise EstimationError(
            f"no usable rows for segment {j}, season {k} with p={p}", cell=(j, k)
        )
    # column i-1 holds lag i; Y is 0-based so Y[t - 1 - i] is Y_{t-i}
    lags = np.arange(1, p + 1)
    Z = Y[times[:, None] - 1 - lags[None, :]]
    return DesignSystem(Z, Y[times - 1], times, j, k)


def constraint_matrix(delta_row) -> np.ndarray:
    """Rows of the identity selecting the excluded lags (``delta == 0``)."""
    delta_row = np.asarray(delta_row).astype(bool)
    return np.eye(delta_row.size)[~delta_row]


def _checked_inverse(gram: np.ndarray, cell=None) -> np.ndarray:
    scale = np.max(np.abs(np.diag(gram)))
    if scale <= 0.0 or np.linalg.eigvalsh(gram)[0] <= RANK_TOL * scale:
        raise EstimationError(f"rank-deficient design for cell {cell}", cell=cell)
    return np.linalg.inv(gram)


def restricted_ls(gram_inv: np.ndarray, phi_ls: np.ndarray, delta_row) -> np.ndarray:
    """Least squares under ``H phi = 0`` from the unrestricted solution.

    ``phi = phi_ls - G^-1 H' (H G^-1 H')^-1 H phi_ls`` with ``G = Z'Z``.
    """
    H = constraint_matrix(delta_row)
    if H.shape[0] == 0:
        return phi_ls.copy()
    A = gram_inv @ H.T
    phi = phi_ls - A @ np.linalg.solve(H @ A, H @ phi_ls)
    phi[~np.asarray(delta_row).astype(bool)] = 0.0
    return phi


def estimate_phi(ds: DesignSystem, delta_row) -> np.ndarray:
    """Restricted least-squares PAR coefficients for one cell."""
    delta_row = np.asarray(delta_row).astype(bool)
    if delta_row.size != ds.p:
        raise DomainError(f"indicator length {delta_row.size} does not match p={ds.p}")
    if not delta_row.any():
        return np.zeros(ds.p)
    gram = ds.Z.T @ ds.Z
    gram_inv = _checked_inverse(gram, cell=(ds.segment, ds.season))
    phi_ls = gram_inv @ (ds.Z.T @ ds.target)
    return restricted_ls(gram_inv, phi_ls, delta_row)


def cell_residuals(ds: DesignSystem, phi) -> np.ndarray:
    return ds.target - ds.Z @ np.asarray(phi, dtype=float)


def innovation_variances(Y, seg: Segmentation, phi, s: int, p: int):
    """Residuals and per-cell innovation variances.

    ``phi`` has shape ``(M, s, p)``.  Returns ``(sigma2, n_obs, residuals)``
    where ``sigma2`` and ``n_obs`` have shape ``(M, s)`` and ``residuals``
    is a length-``T`` array holding NaN where no residual is formed.
    """
    Y = np.asarray(Y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sigma2 = np.empty((seg.M, s))
    n_obs = np.zeros((seg.M, s), dtype=int)
    resid = np.full(Y.size, np.nan)
    for j in range(1, seg.M + 1):
        for k in range(1, s + 1):
            ds = build_design(Y, seg, j, k, p, s)
            e = cell_residuals(ds, phi[j - 1, k - 1])
            resid[ds.times - 1] = e
            n_obs[j - 1, k - 1] = e.size
            sigma2[j - 1, k - 1] = (e @ e) / e.size
    return sigma2, n_obs, resid
