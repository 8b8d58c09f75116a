"""Multiple changepoint detection for periodic autoregressive time series."""

__version__ = "0.1.0"

from .core import (
    ConfigError,
    DiagnosticsError,
    DomainError,
    EstimationError,
    FitReport,
    IngestionError,
    ParChangeError,
    PeriodicSeries,
    SegmentModel,
    Segmentation,
    SubsetSpec,
    linear_index,
    segment_of,
    year_season,
)
from .criterion import CriterionConfig, score_candidate
from .evaluation import accuracy_measures, diagnose, one_step_forecasts
from .generator import GeneratorSpec, RegimeParams, generate
from .optimizer import GaConfig, run_ga
