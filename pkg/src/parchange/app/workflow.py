"""Fit, forecast and diagnose workflows shared by the CLI subcommands."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..core import ConfigError, DiagnosticsError, FitReport, PeriodicSeries
from ..criterion import CriterionConfig
from ..evaluation import diagnose, one_step_forecasts
from ..optimizer import GaConfig, run_ga
from .io import apply_transform, load_csv, split_holdout


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    period: int = 12
    max_order: int = 1
    mrl: int = 1
    max_changepoints: int = 3
    ic: float = 2.0
    beta: float = 1.0
    pop_size: int = 50
    generations: int | None = None
    pc: float = 0.9
    pm: float | None = None
    elitism: int = 1
    seed: int = 0
    holdout_years: int = 1
    transform: str = "log"
    mode: str = "hga"
    portmanteau_lag: int = 15
    acf_lags: int = 36
    th_bits: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.period < 1:
            raise ConfigError(f"period must be positive, got {self.period}")
        if self.holdout_years < 0:
            raise ConfigError("holdout years must be nonnegative")
        if self.transform not in ("none", "log"):
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.portmanteau_lag < 1 or self.acf_lags < 1:
            raise ConfigError("lags must be positive")
        # surface GA/criterion range errors at construction time
        self.criterion()
        self.ga()

    def criterion(self) -> CriterionConfig:
        return CriterionConfig(
            ic=self.ic, beta=self.beta, p=self.max_order, mrl=self.mrl, m_max=self.max_changepoints
        )

    def ga(self) -> GaConfig:
        return GaConfig(
            pop_size=self.pop_size,
            generations=self.generations,
            pc=self.pc,
            pm=self.pm,
            elitism=self.elitism,
            seed=self.seed,
            mode=self.mode,
            th_bits=self.th_bits,
            workers=self.workers,
        )

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("workers")  # execution detail; must not change the report
        return d


def load_series(cfg: RunConfig) -> PeriodicSeries:
    if cfg.input is None:
        raise ConfigError("an input CSV is required")
    return apply_transform(load_csv(cfg.input, cfg.period), cfg.transform)


def add_forecast(report: FitReport, full: PeriodicSeries, cfg: RunConfig) -> FitReport:
    if cfg.holdout_years == 0:
        return dataclasses.replace(report, forecast=None)
    fc = one_step_forecasts(report, full, cfg.holdout_years, cfg.transform)
    return dataclasses.replace(report, forecast=fc)


def add_diagnostics(report: FitReport, cfg: RunConfig) -> FitReport:
    meta = dict(report.metadata)
    meta.pop("diagnostics_error", None)
    try:
        dg = diagnose(report, cfg.portmanteau_lag, cfg.acf_lags)
    except (DiagnosticsError, ValueError) as exc:
        meta["diagnostics_error"] = str(exc)
        return dataclasses.replace(report, diagnostics=None, metadata=meta)
    return dataclasses.replace(report, diagnostics=dg, metadata=meta)


def fit_series(full: PeriodicSeries, cfg: RunConfig) -> FitReport:
    """Search on all but the held-out years, then forecast and diagnose."""
    train = split_holdout(full, cfg.holdout_years)
    report = run_ga(train, cfg.ga(), cfg.criterion())
    meta = {"config": cfg.echo(), **report.metadata}
    meta.pop("ga", None)
    meta.pop("criterion", None)
    report = dataclasses.replace(report, metadata=meta)
    if not report.feasible:
        return report
    return add_diagnostics(add_forecast(report, full, cfg), cfg)


def sweep_series(full: PeriodicSeries, cfg: RunConfig) -> list[FitReport]:
    """One search per maximum changepoint count ``0..max_changepoints``."""
    return [
        fit_series(full, dataclasses.replace(cfg, max_changepoints=m))
        for m in range(cfg.max_changepoints + 1)
    ]


def sweep_rows(reports: list[FitReport]) -> list[dict]:
    rows = []
    for r in reports:
        cfg = r.metadata["config"]
        fc = r.forecast
        rows.append(
            {
                "label": f"PAR({cfg['max_changepoints']};{cfg['max_order']};{cfg['mrl']})",
                "max_changepoints": cfg["max_changepoints"],
                "changepoint_years": r.changepoint_years(),
                "g": r.g,
                "fitness": r.fitness,
                "rmse": None if fc is None else fc.rmse,
                "mae": None if fc is None else fc.mae,
                "mape": None if fc is None else fc.mape,
            }
        )
    return rows
