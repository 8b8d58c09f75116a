"""Domain types for segmented periodic autoregressive models.

Time is indexed 1-based throughout: year ``n`` in ``1..N``, season ``k`` in
``1..s`` and linear time ``t = (n - 1) * s + k``.  Calendar years are a
presentation concern and only appear through ``start_year``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "ParChangeError",
    "DomainError",
    "ConfigError",
    "IngestionError",
    "EstimationError",
    "DiagnosticsError",
    "PeriodicSeries",
    "Segmentation",
    "SubsetSpec",
    "SegmentModel",
    "FitReport",
    "linear_index",
    "year_season",
    "segment_of",
]


class ParChangeError(Exception):
    """Base class for all package errors."""


class DomainError(ParChangeError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(ParChangeError, ValueError):
    """Invalid or infeasible run configuration."""


class IngestionError(ParChangeError, ValueError):
    """Input data could not be read or transformed."""


class EstimationError(ParChangeError):
    """A candidate model cannot be estimated (rank deficiency, empty cell).

    ``cell`` carries the offending ``(segment, season)`` pair when known.
    """

    def __init__(self, message: str, cell: tuple[int, int] | None = None):
        super().__init__(message)
        self.cell = cell


class DiagnosticsError(ParChangeError):
    """Residual diagnostics are undefined for the given residuals."""


def linear_index(n: int, k: int, s: int) -> int:
    """Return the linear time ``(n - 1) * s + k`` of season ``k`` in year ``n``."""
    if s < 1:
        raise DomainError(f"period must be positive, got {s}")
    if not 1 <= k <= s:
        raise DomainError(f"season {k} outside 1..{s}")
    if n < 1:
        raise DomainError(f"year must be positive, got {n}")
    return (n - 1) * s + k


def year_season(t: int, s: int) -> tuple[int, int]:
    """Inverse of :func:`linear_index`."""
    if s < 1:
        raise DomainError(f"period must be positive, got {s}")
    if t < 1:
        raise DomainError(f"linear time must be positive, got {t}")
    n, k = divmod(t - 1, s)
    return n + 1, k + 1


@dataclass(frozen=True)
class PeriodicSeries:
    """Observations made of ``N`` whole years of ``period`` seasons each."""

    values: np.ndarray
    period: int
    start_year: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("values must be a non-empty 1-d sequence")
        if self.period < 1:
            raise DomainError(f"period must be positive, got {self.period}")
        if values.size % self.period:
            raise DomainError(
                f"length {values.size} is not a multiple of the period {self.period}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("values must all be finite")

    @property
    def T(self) -> int:
        return self.values.size

    @property
    def N(self) -> int:
        return self.values.size // self.period

    def year_label(self, n: int) -> int:
        return self.start_year + n - 1

    def head_years(self, n_years: int) -> "PeriodicSeries":
        """The first ``n_years`` years as a new series."""
        if not 1 <= n_years <= self.N:
            raise DomainError(f"cannot take {n_years} of {self.N} years")
        return PeriodicSeries(self.values[: n_years * self.period], self.period, self.start_year)


@dataclass(frozen=True)
class Segmentation:
    """Partition of years ``1..N`` into ``m + 1`` contiguous regimes.

    ``tau[j - 1]`` is the first year of segment ``j + 1``; the sentinels
    ``tau_0 = 1`` and ``tau_M = N + 1`` are implicit.
    """

    N: int
    tau: tuple[int, ...] = ()
    mrl: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(x) for x in self.tau))
        if self.mrl < 1:
            raise DomainError(f"mrl must be at least 1, got {self.mrl}")
        b = self.boundaries
        for j in range(1, len(b)):
            if b[j] < b[j - 1] + self.mrl:
                raise DomainError(
                    f"segment {j} spans years {b[j - 1]}..{b[j] - 1}, "
                    f"shorter than mrl={self.mrl}"
                )

    @property
    def m(self) -> int:
        return len(self.tau)

    @property
    def M(self) -> int:
        return len(self.tau) + 1

    @property
    def boundaries(self) -> tuple[int, ...]:
        return (1, *self.tau, self.N + 1)

    def segment_years(self, j: int) -> range:
        if not 1 <= j <= self.M:
            raise DomainError(f"segment {j} outside 1..{self.M}")
        b = self.boundaries
        return range(b[j - 1], b[j])

    def segment_length(self, j: int) -> int:
        return len(self.segment_years(j))

    def key(self) -> tuple[int, ...]:
        return (self.N, self.mrl, *self.tau)


def segment_of(seg: Segmentation, n: int) -> int:
    """Index ``j`` of the segment containing year ``n``."""
    if not 1 <= n <= seg.N:
        raise DomainError(f"year {n} outside 1..{seg.N}")
    j = 1
    for tau in seg.tau:
        if n >= tau:
            j += 1
    return j


@dataclass(frozen=True)
class SubsetSpec:
    """PAR lag indicators, one ``(s, p)`` boolean array per segment.

    Entry ``[k - 1, i - 1]`` of ``delta[j - 1]`` corresponds to position
    ``p * (k - 1) + i`` of the flat indicator vector.
    """

    delta: tuple[np.ndarray, ...]
    p: int

    def __post_init__(self):
        arrays = []
        for d in self.delta:
            a = np.asarray(d)
            if a.ndim == 1:
                if a.size % self.p:
                    raise DomainError("flat indicator length must be a multiple of p")
                a = a.reshape(-1, self.p)
            if not np.isin(a, (0, 1)).all():
                raise DomainError("lag indicators must be 0/1")
            a = a.astype(bool)
            a.setflags(write=False)
            arrays.append(a)
        object.__setattr__(self, "delta", tuple(arrays))

    def flat(self, j: int) -> np.ndarray:
        return self.delta[j - 1].reshape(-1).astype(int)


@dataclass(frozen=True)
class SegmentModel:
    """Estimated parameters of one regime.

    Arrays are indexed by season (row) and lag (column), both 0-based.
    ``n_obs[k]`` is the number of residuals formed for the season and
    ``sigma2`` is left unfloored so degenerate fits remain visible.
    """

    first_year: int
    last_year: int
    a: float
    b: float
    mu: np.ndarray
    phi: np.ndarray
    delta: np.ndarray
    sigma2: np.ndarray
    n_obs: np.ndarray

    @property
    def n_params(self) -> np.ndarray:
        return self.delta.sum(axis=1)

    @property
    def degenerate(self) -> bool:
        return bool(np.any(self.sigma2 <= 0.0))


@dataclass(frozen=True)
class FitReport:
    segmentation: Segmentation
    models: tuple[SegmentModel, ...]
    g: float
    fitness: float
    residuals: np.ndarray
    period: int
    start_year: int = 1
    forecast: Any = None
    diagnostics: Any = None
    metadata: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.g))

    def changepoint_years(self) -> list[int]:
        """Calendar label of the first year of each new regime."""
        return [self.start_year + tau - 1 for tau in self.segmentation.tau]

    def last_years_before_change(self) -> list[int]:
        return [self.start_year + tau - 2 for tau in self.segmentation.tau]
