"""Genetic search over segmentations (and, in SGA mode, lag indicators).

A chromosome is laid out as::

    [ m-field | th_1 | ... | th_mMax | delta_1 | ... | delta_{mMax+1} ]

The m-field is two bits (wider only when ``m_max > 3``).  Each ``th_i``
block of ``th_bits`` bits encodes a fraction in (0, 1) that places
changepoint ``i`` inside the range left legal by the minimum regime length,
so every chromosome decodes to a valid segmentation.  The delta blocks only
exist in SGA mode; in HGA mode lag indicators are found by exhaustive
enumeration inside the scorer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ConfigError, FitReport, PeriodicSeries, Segmentation, SubsetSpec
from .criterion import CandidateFit, CandidateScorer, CriterionConfig

HGA = "hga"
SGA = "sga"


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 50
    generations: int | None = None
    pc: float = 0.9
    pm: float | None = None
    elitism: int = 1
    seed: int = 0
    mode: str = HGA
    th_bits: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.mode not in (HGA, SGA):
            raise ConfigError(f"mode must be 'hga' or 'sga', got {self.mode!r}")
        if self.pop_size < 2:
            raise ConfigError("population size must be at least 2")
        if not 0.0 <= self.pc <= 1.0:
            raise ConfigError(f"crossover rate {self.pc} outside [0, 1]")
        if self.pm is not None and not 0.0 <= self.pm <= 1.0:
            raise ConfigError(f"mutation rate {self.pm} outside [0, 1]")
        if not 0 <= self.elitism < self.pop_size:
            raise ConfigError("elitism must be in [0, pop_size)")
        if self.th_bits < 1:
            raise ConfigError("th_bits must be positive")
        if self.generations is not None and self.generations < 0:
            raise ConfigError("generations must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def n_generations(self) -> int:
        if self.generations is not None:
            return self.generations
        return 200 if self.mode == HGA else 1000


@dataclass(frozen=True)
class Layout:
    m_max: int
    th_bits: int
    delta_bits: int = 0  # s * p per segment in SGA mode, else 0

    @property
    def m_bits(self) -> int:
        return max(2, self.m_max.bit_length())

    @property
    def th_start(self) -> int:
        return self.m_bits

    @property
    def delta_start(self) -> int:
        return self.m_bits + self.m_max * self.th_bits

    @property
    def length(self) -> int:
        return self.delta_start + (self.m_max + 1) * self.delta_bits

    def cut_points(self) -> list[int]:
        """Field boundaries strictly inside the chromosome."""
        cuts = [self.m_bits + i * self.th_bits for i in range(self.m_max + 1)]
        if self.delta_bits:
            cuts += [self.delta_start + i * self.delta_bits for i in range(1, self.m_max + 1)]
        return [c for c in cuts if 0 < c < self.length]


def _bits_to_int(bits) -> int:
    out = 0
    for bit in bits:
        out = (out << 1) | int(bit)
    return out


def th_value(bits) -> float:
    """Fraction ``(v + 0.5) / 2**B`` in the open unit interval."""
    return (_bits_to_int(bits) + 0.5) / 2 ** len(bits)


def place_changepoints(th, N: int, mrl: int) -> tuple[int, ...]:
    """Changepoint years from placement fractions ``th`` (one per changepoint).

    ``tau_i = mrl + tau_{i-1} + (N - (m - i + 2) * mrl - tau_{i-1} + 1) * th_i``
    with ``tau_0 = 1``, floored to an integer year.
    """
    m = len(th)
    prev = 1
    taus = []
    for i, frac in enumerate(th, start=1):
        room = N - (m - i + 2) * mrl - prev + 1
        tau = math.floor(mrl + prev + room * frac)
        # defensive: floors cannot break the chain, but keep it explicit
        tau = min(max(tau, prev + mrl), N + 1 - (m - i + 1) * mrl)
        taus.append(tau)
        prev = tau
    return tuple(taus)


def decode(bits, N: int, mrl: int, m_max: int, th_bits: int = 10) -> Segmentation:
    """Segmentation encoded by a chromosome; total for every bit string."""
    layout = Layout(m_max, th_bits)
    bits = np.asarray(bits)
    m = min(_bits_to_int(bits[: layout.m_bits]), m_max)
    while m > 0 and N < (m + 1) * mrl:
        m -= 1
    th = [
        th_value(bits[layout.th_start + i * th_bits : layout.th_start + (i + 1) * th_bits])
        for i in range(m)
    ]
    return Segmentation(N, place_changepoints(th, N, mrl), mrl)


def decode_subset(bits, layout: Layout, s: int, p: int) -> SubsetSpec:
    bits = np.asarray(bits)
    blocks = tuple(
        bits[layout.delta_start + j * layout.delta_bits : layout.delta_start + (j + 1) * layout.delta_bits]
        .reshape(s, p)
        .astype(bool)
        for j in range(layout.m_max + 1)
    )
    return SubsetSpec(blocks, p)


def roulette_select(weights, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Indices drawn with probability proportional to ``weights``.

    Falls back to uniform draws when no weight is positive.
    """
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if not (np.isfinite(total) and total > 0):
        w = np.ones_like(w)
        total = w.size
    cum = np.cumsum(w)
    u = rng.random(size) * cum[-1]
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, w.size - 1)


def crossover(parent_a, parent_b, pc: float, rng: np.random.Generator, cut_points):
    """Single-point crossover restricted to field boundaries."""
    a = np.array(parent_a, copy=True)
    b = np.array(parent_b, copy=True)
    if rng.random() < pc and len(cut_points):
        cut = cut_points[rng.integers(len(cut_points))]
        a[cut:], b[cut:] = parent_b[cut:], parent_a[cut:]
    return a, b


def mutate(bits, pm: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``pm``."""
    bits = np.asarray(bits)
    flips = rng.random(bits.shape) < pm
    return (bits ^ flips).astype(bits.dtype)


def selection_weights(g: np.ndarray, beta: float) -> np.ndarray:
    """Fitness ``exp(-g / beta)`` rescaled by its maximum to avoid overflow."""
    feasible = np.isfinite(g)
    w = np.zeros(g.size)
    if feasible.any():
        w[feasible] = np.exp(-(g[feasible] - g[feasible].min()) / beta)
    return w


def fit_to_report(fit: CandidateFit, series: PeriodicSeries, metadata: dict | None = None) -> FitReport:
    resid = fit.residuals if fit.residuals is not None else np.full(series.T, np.nan)
    return FitReport(
        segmentation=fit.segmentation,
        models=fit.models,
        g=fit.value.g,
        fitness=fit.value.fitness,
        residuals=resid,
        period=series.period,
        start_year=series.start_year,
        metadata=dict(metadata or {}),
    )


@dataclass
class GaState:
    """Bookkeeping of one run; ``history`` holds the incumbent g per generation."""

    best: CandidateFit | None = None
    history: list = field(default_factory=list)


class GeneticSearch:
    def __init__(self, series: PeriodicSeries, ga: GaConfig, crit: CriterionConfig):
        if series.N < crit.mrl:
            raise ConfigError(
                f"series has {series.N} years, fewer than the minimum regime length {crit.mrl}"
            )
        self.series = series
        self.ga = ga
        self.crit = crit
        s, p = series.period, crit.p
        self.layout = Layout(crit.m_max, ga.th_bits, s * p if ga.mode == SGA else 0)
        self.pm = ga.pm if ga.pm is not None else 1.0 / self.layout.length
        self.scorer = CandidateScorer(series, crit)
        self.state = GaState()

    def candidate(self, bits):
        seg = decode(bits, self.series.N, self.crit.mrl, self.crit.m_max, self.ga.th_bits)
        subset = None
        if self.ga.mode == SGA:
            subset = decode_subset(bits, self.layout, self.series.period, self.crit.p)
        return seg, subset

    def evaluate(self, pop: np.ndarray) -> list[CandidateFit]:
        cands = [self.candidate(bits) for bits in pop]
        pending = {}
        for seg, subset in cands:
            key = self.scorer._candidate_key(seg, subset)
            if self.scorer.cached(seg, subset) is None and key not in pending:
                pending[key] = (seg, subset)
        if self.ga.workers > 1 and len(pending) > 1:
            with ThreadPoolExecutor(self.ga.workers) as pool:
                results = list(pool.map(lambda c: self.scorer.compute(*c), pending.values()))
        else:
            results = [self.scorer.compute(*c) for c in pending.values()]
        # merged in population order whatever the worker count
        for key, res in zip(pending, results):
            self.scorer.store(key, res)
        return [self.scorer.score(seg, subset) for seg, subset in cands]

    def _consider(self, fits):
        for fit in fits:
            best = self.state.best
            if best is None or fit.value.g < best.value.g:
                self.state.best = fit

    def run(self) -> FitReport:
        ga, crit = self.ga, self.crit
        meta = {"seed": ga.seed, "ga": asdict(ga), "criterion": asdict(crit)}
        if ga.mode == HGA and crit.m_max == 0:
            fit = self.scorer.score(Segmentation(self.series.N, (), crit.mrl))
            meta.update(evaluations=1, history=[fit.value.g])
            return fit_to_report(fit, self.series, meta)

        rng = np.random.default_rng(ga.seed)
        P, L = ga.pop_size, self.layout.length
        cuts = self.layout.cut_points()
        pop = rng.integers(0, 2, size=(P, L), dtype=np.uint8)
        fits = self.evaluate(pop)
        self._consider(fits)
        self.state.history.append(self.state.best.value.g)
        n_child = P - ga.elitism
        n_pairs = -(-n_child // 2)
        for _ in range(ga.n_generations):
            g = np.array([f.value.g for f in fits])
            order = np.lexsort((np.arange(P), g))
            elites = pop[order[: ga.elitism]]
            parents = roulette_select(selection_weights(g, crit.beta), rng, size=2 * n_pairs)
            children = []
            for i in range(n_pairs):
                children.extend(
                    crossover(pop[parents[2 * i]], pop[parents[2 * i + 1]], ga.pc, rng, cuts)
                )
            children = mutate(np.array(children[:n_child]), self.pm, rng)
            pop = np.vstack([elites, children]) if ga.elitism else children
            fits = self.evaluate(pop)
            self._consider(fits)
            self.state.history.append(self.state.best.value.g)
        meta.update(evaluations=len(self.scorer._candidates), history=self.state.history)
        return fit_to_report(self.state.best, self.series, meta)


def run_ga(series: PeriodicSeries, ga: GaConfig, crit: CriterionConfig) -> FitReport:
    """Best candidate found by the genetic search, as a report without forecasts."""
    return GeneticSearch(series, ga, crit).run()
