"""Penalized log-variance criterion and candidate scoring.

For a candidate with ``M`` segments the criterion is::

    g = [sum_jk n_jk * log(sigma2_jk) + IC * sum_jk P_jk] / T

where ``n_jk`` is the number of residuals formed in cell ``(j, k)`` and
``P_jk`` the number of AR coefficients left free by the lag indicator.
Trend and seasonal-mean parameters are not counted in ``P_jk``.  Fitness is
``exp(-g / beta)``; infeasible candidates get ``g = inf`` and fitness 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    EstimationError,
    PeriodicSeries,
    SegmentModel,
    Segmentation,
    SubsetSpec,
)
from .estimation import (
    DesignSystem,
    _checked_inverse,
    build_design,
    cell_residuals,
    restricted_ls,
    seasonal_block_means,
    trend_ols,
)

SIGMA2_FLOOR = 1e-12
MAX_ORDER = 12


@dataclass(frozen=True)
class CriterionConfig:
    ic: float = 2.0
    beta: float = 1.0
    p: int = 1
    mrl: int = 1
    m_max: int = 3

    def __post_init__(self):
        if not self.ic >= 0:
            raise ConfigError(f"IC must be nonnegative, got {self.ic}")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not 1 <= self.p <= MAX_ORDER:
            raise ConfigError(f"max order must lie in 1..{MAX_ORDER}, got {self.p}")
        if self.mrl < 1:
            raise ConfigError(f"mrl must be at least 1, got {self.mrl}")
        if self.m_max < 0:
            raise ConfigError(f"max changepoints must be nonnegative, got {self.m_max}")


@dataclass(frozen=True)
class CriterionValue:
    g: float
    fitness: float
    sigma2: np.ndarray | None = None
    n_obs: np.ndarray | None = None
    n_params: np.ndarray | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.g))


INFEASIBLE = CriterionValue(g=float("inf"), fitness=0.0)


def fitness_from_g(g: float, beta: float) -> float:
    if not np.isfinite(g):
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(-g / beta))


def criterion_g(sigma2, n_obs, n_params, cfg: CriterionConfig, T: int) -> CriterionValue:
    """Evaluate the criterion from per-cell variances, counts and free-lag counts."""
    sigma2 = np.asarray(sigma2, dtype=float)
    n_obs = np.asarray(n_obs)
    n_params = np.asarray(n_params)
    floored = np.maximum(sigma2, SIGMA2_FLOOR)
    if not np.all(floored > 0):
        raise ValueError("nonpositive innovation variance after flooring")
    g = float((np.sum(n_obs * np.log(floored)) + cfg.ic * np.sum(n_params)) / T)
    return CriterionValue(g, fitness_from_g(g, cfg.beta), sigma2, n_obs, n_params)


def subset_counts(subset: SubsetSpec) -> np.ndarray:
    return np.array([d.sum(axis=1) for d in subset.delta])


@dataclass(frozen=True)
class CellFit:
    delta: np.ndarray
    phi: np.ndarray
    sigma2: float
    score: float
    residuals: np.ndarray
    times: np.ndarray

    @property
    def n_obs(self) -> int:
        return self.residuals.size


def cell_score(n: int, sigma2: float, n_free: int, ic: float) -> float:
    return n * float(np.log(max(sigma2, SIGMA2_FLOOR))) + ic * n_free


def _fit_cell(ds: DesignSystem, delta_row, gram_inv, phi_ls, ic: float) -> CellFit:
    delta_row = np.asarray(delta_row, dtype=bool)
    if delta_row.any():
        phi = restricted_ls(gram_inv, phi_ls, delta_row)
    else:
        phi = np.zeros(ds.p)
    e = cell_residuals(ds, phi)
    sigma2 = float(e @ e) / e.size
    return CellFit(delta_row, phi, sigma2, cell_score(e.size, sigma2, int(delta_row.sum()), ic), e, ds.times)


def _unrestricted(ds: DesignSystem):
    try:
        gram_inv = _checked_inverse(ds.Z.T @ ds.Z, cell=(ds.segment, ds.season))
    except EstimationError:
        return None, None
    return gram_inv, gram_inv @ (ds.Z.T @ ds.target)


def fit_cell(ds: DesignSystem, delta_row, ic: float) -> CellFit:
    """Fit one cell under a given lag indicator."""
    delta_row = np.asarray(delta_row, dtype=bool)
    gram_inv = phi_ls = None
    if delta_row.any():
        gram_inv, phi_ls = _unrestricted(ds)
        if gram_inv is None:
            raise EstimationError(
                f"rank-deficient design for cell {(ds.segment, ds.season)}",
                cell=(ds.segment, ds.season),
            )
    return _fit_cell(ds, delta_row, gram_inv, phi_ls, ic)


def best_subset_cell(ds: DesignSystem, cfg: CriterionConfig) -> CellFit:
    """Exhaustive search over the ``2**p`` lag indicators of one cell.

    Minimizes ``n * log(sigma2) + IC * P``; ties go to fewer free lags and
    then to the lexicographically smallest indicator.
    """
    if ds.p > MAX_ORDER:
        raise ConfigError(f"exhaustive search limited to p <= {MAX_ORDER}")
    gram_inv, phi_ls = _unrestricted(ds)
    best = None
    best_key = None
    for bits in itertools.product((0, 1), repeat=ds.p):
        if any(bits) and gram_inv is None:
            continue
        fit = _fit_cell(ds, bits, gram_inv, phi_ls, cfg.ic)
        key = (fit.score, sum(bits), bits)
        if best_key is None or key < best_key:
            best, best_key = fit, key
    return best


@dataclass(frozen=True)
class CandidateFit:
    segmentation: Segmentation
    value: CriterionValue
    models: tuple[SegmentModel, ...] = ()
    residuals: np.ndarray | None = None
    Y: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.value.feasible


def _presample_context(seg: Segmentation, j: int, s: int, p: int) -> tuple:
    """Earlier segments whose adjusted values feed the lags of segment ``j``."""
    b = seg.boundaries
    t0 = (b[j - 1] - 1) * s + 1
    lo = t0 - p
    ctx = []
    for i in range(j - 1, 0, -1):
        first_t = (b[i - 1] - 1) * s + 1
        ctx.append((b[i - 1], b[i]))
        if first_t <= lo:
            break
    return tuple(ctx)


@dataclass
class CandidateScorer:
    """Memoizing scorer for candidate segmentations of one series.

    Results depend only on the inputs, so cached and fresh evaluations are
    bitwise identical.
    """

    series: PeriodicSeries
    cfg: CriterionConfig
    _blocks: dict = field(default_factory=dict, repr=False)
    _cells: dict = field(default_factory=dict, repr=False)
    _candidates: dict = field(default_factory=dict, repr=False)

    def _block(self, start: int, end: int):
        key = (start, end)
        hit = self._blocks.get(key)
        if hit is None:
            s = self.series.period
            lo, hi = (start - 1) * s, (end - 1) * s
            t = np.arange(1, self.series.T + 1, dtype=float)[lo:hi]
            x = self.series.values[lo:hi]
            a, b = trend_ols(t, x)
            mu, Y = seasonal_block_means(x - a - b * t, s)
            hit = (float(a), float(b), mu, Y)
            self._blocks[key] = hit
        return hit

    def cached(self, seg: Segmentation, subset: SubsetSpec | None = None):
        return self._candidates.get(self._candidate_key(seg, subset))

    def _candidate_key(self, seg, subset):
        if subset is None:
            return seg.key()
        return (seg.key(), tuple(d.tobytes() for d in subset.delta[: seg.M]))

    def compute(self, seg: Segmentation, subset: SubsetSpec | None = None) -> CandidateFit:
        """Evaluate without touching the candidate cache."""
        try:
            return self._evaluate(seg, subset)
        except EstimationError as exc:
            return CandidateFit(seg, CriterionValue(float("inf"), 0.0, message=str(exc)))

    def store(self, key, fit: CandidateFit) -> None:
        self._candidates.setdefault(key, fit)

    def score(self, seg: Segmentation, subset: SubsetSpec | None = None) -> CandidateFit:
        key = self._candidate_key(seg, subset)
        hit = self._candidates.get(key)
        if hit is None:
            hit = self.compute(seg, subset)
            self.store(key, hit)
        return hit

    def _evaluate(self, seg: Segmentation, subset: SubsetSpec | None) -> CandidateFit:
        s = self.series.period
        p = self.cfg.p
        if seg.N != self.series.N:
            raise ConfigError(f"segmentation covers {seg.N} years, series has {self.series.N}")
        b = seg.boundaries
        blocks = [self._block(b[j - 1], b[j]) for j in range(1, seg.M + 1)]
        Y = np.concatenate([blk[3] for blk in blocks])
        resid = np.full(Y.size, np.nan)
        sigma2 = np.empty((seg.M, s))
        n_obs = np.empty((seg.M, s), dtype=int)
        n_params = np.empty((seg.M, s), dtype=int)
        models = []
        for j in range(1, seg.M + 1):
            ctx = _presample_context(seg, j, s, p)
            phi = np.zeros((s, p))
            delta = np.zeros((s, p), dtype=bool)
            for k in range(1, s + 1):
                row = None if subset is None else subset.delta[j - 1][k - 1]
                ckey = (b[j - 1], b[j], ctx, k, None if row is None else row.tobytes())
                cell = self._cells.get(ckey)
                if cell is None:
                    ds = build_design(Y, seg, j, k, p, s)
                    cell = best_subset_cell(ds, self.cfg) if row is None else fit_cell(ds, row, self.cfg.ic)
                    self._cells[ckey] = cell
                resid[cell.times - 1] = cell.residuals
                sigma2[j - 1, k - 1] = cell.sigma2
                n_obs[j - 1, k - 1] = cell.n_obs
                n_params[j - 1, k - 1] = int(cell.delta.sum())
                phi[k - 1] = cell.phi
                delta[k - 1] = cell.delta
            a, slope, mu = blocks[j - 1][:3]
            models.append(
                SegmentModel(
                    first_year=b[j - 1],
                    last_year=b[j] - 1,
                    a=a,
                    b=slope,
                    mu=mu.copy(),
                    phi=phi,
                    delta=delta,
                    sigma2=sigma2[j - 1].copy(),
                    n_obs=n_obs[j - 1].copy(),
                )
            )
        value = criterion_g(sigma2, n_obs, n_params, self.cfg, self.series.T)
        return CandidateFit(seg, value, tuple(models), resid, Y)


def score_candidate(
    series: PeriodicSeries,
    seg: Segmentation,
    cfg: CriterionConfig,
    subset: SubsetSpec | None = None,
) -> CandidateFit:
    """Full estimation pipeline and criterion for one candidate.

    With ``subset=None`` every cell's lag indicator is chosen by exhaustive
    search; otherwise the given indicators are used as-is.  Estimation
    failures yield an infeasible fit rather than an exception.
    """
    return CandidateScorer(series, cfg).score(seg, subset)
