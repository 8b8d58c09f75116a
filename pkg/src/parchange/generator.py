"""Simulation of segmented trend + PAR series with planted changepoints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, PeriodicSeries, Segmentation


@dataclass(frozen=True)
class RegimeParams:
    """Parameters of one regime: ``phi`` has shape ``(s, p)``, the rest ``(s,)``."""

    a: float
    b: float
    mu: np.ndarray
    phi: np.ndarray
    sigma2: np.ndarray


@dataclass(frozen=True)
class GeneratorSpec:
    period: int
    segmentation: Segmentation
    regimes: tuple[RegimeParams, ...]
    seed: int = 0
    burn_in: int | None = None
    start_year: int = 1

    def __post_init__(self):
        if len(self.regimes) != self.segmentation.M:
            raise ConfigError(
                f"{len(self.regimes)} regimes given for {self.segmentation.M} segments"
            )
        orders = {np.atleast_2d(r.phi).shape[1] for r in self.regimes}
        if len(orders) != 1:
            raise ConfigError("all regimes must share the same maximum order")
        for j, r in enumerate(self.regimes, start=1):
            sigma2 = np.asarray(r.sigma2, dtype=float)
            if sigma2.shape != (self.period,) or np.any(sigma2 < 0):
                raise ConfigError(f"segment {j}: need {self.period} nonnegative variances")
            if np.shape(r.mu) != (self.period,):
                raise ConfigError(f"segment {j}: need {self.period} seasonal means")
            if np.atleast_2d(r.phi).shape[0] != self.period:
                raise ConfigError(f"segment {j}: need coefficients for {self.period} seasons")

    @property
    def p(self) -> int:
        return np.atleast_2d(self.regimes[0].phi).shape[1]


def companion(phi_k) -> np.ndarray:
    phi_k = np.asarray(phi_k, dtype=float)
    p = phi_k.size
    A = np.zeros((p, p))
    A[0] = phi_k
    A[1:, :-1] = np.eye(p - 1)
    return A


def annual_operator(phi) -> np.ndarray:
    """Product ``A_s ... A_1`` of the seasonal companion matrices."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    out = np.eye(phi.shape[1])
    for phi_k in phi:
        out = companion(phi_k) @ out
    return out


def is_periodic_stationary(phi) -> bool:
    """True when the annual operator has spectral radius below one."""
    return bool(np.max(np.abs(np.linalg.eigvals(annual_operator(phi)))) < 1.0)


def generate(spec: GeneratorSpec) -> PeriodicSeries:
    s = spec.period
    seg = spec.segmentation
    p = spec.p
    for j, r in enumerate(spec.regimes, start=1):
        if not is_periodic_stationary(r.phi):
            raise ConfigError(f"segment {j} is not periodic stationary")
    burn = 10 * s if spec.burn_in is None else spec.burn_in
    burn = -(-burn // s) * s  # whole years keep the season alignment
    rng = np.random.default_rng(spec.seed)
    T = seg.N * s
    # regime of each simulated step, burn-in uses the first regime
    regime = np.empty(burn + T, dtype=int)
    regime[:burn] = 0
    bounds = seg.boundaries
    for j in range(1, seg.M + 1):
        regime[burn + (bounds[j - 1] - 1) * s : burn + (bounds[j] - 1) * s] = j - 1
    season = np.arange(burn + T) % s
    sd = np.array([np.sqrt(np.asarray(r.sigma2, dtype=float)) for r in spec.regimes])
    phi = np.array([np.atleast_2d(np.asarray(r.phi, dtype=float)) for r in spec.regimes])
    eps = rng.standard_normal(burn + T) * sd[regime, season]
    Y = np.zeros(burn + T + p)
    for i in range(burn + T):
        Y[i + p] = phi[regime[i], season[i]] @ Y[i : i + p][::-1] + eps[i]
    Y = Y[p + burn :]
    t = np.arange(1, T + 1, dtype=float)
    X = np.empty(T)
    for j, r in enumerate(spec.regimes, start=1):
        sl = slice((bounds[j - 1] - 1) * s, (bounds[j] - 1) * s)
        mu = np.asarray(r.mu, dtype=float)
        X[sl] = r.a + r.b * t[sl] + mu[season[burn:][sl]] + Y[sl]
    return PeriodicSeries(X, s, spec.start_year)


def mean_shift_spec(
    period: int = 12,
    n_years: int = 60,
    change_year: int = 30,
    shift: float = 3.0,
    phi: float = 0.3,
    sigma: float = 1.0,
    seed: int = 0,
    mrl: int = 1,
) -> GeneratorSpec:
    """PAR(1) series whose seasonal means all jump by ``shift * sigma`` at ``change_year``."""
    mu0 = np.sin(2 * np.pi * np.arange(period) / period)
    base = dict(
        a=0.0,
        b=0.0,
        phi=np.full((period, 1), phi),
        sigma2=np.full(period, sigma**2),
    )
    seg = Segmentation(n_years, (change_year,), mrl)
    regimes = (
        RegimeParams(mu=mu0, **base),
        RegimeParams(mu=mu0 + shift * sigma, **base),
    )
    return GeneratorSpec(period, seg, regimes, seed=seed)
