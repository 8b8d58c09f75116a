"""Structured JSON reports.

Reports are plain JSON objects with a fixed key order.  Floats are written
with their shortest round-tripping representation, non-finite values as
``null``, so ``loads(dumps(r))`` reproduces a report exactly and two runs
with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math

import jsonschema
import numpy as np

from ..core import FitReport, SegmentModel, Segmentation
from ..evaluation import DiagnosticsReport, ForecastReport, SegmentDiagnostics

FORMAT = "parchange.report"
VERSION = 1

_num = {"type": ["number", "null"]}
_vec = {"type": "array", "items": _num}
_mat = {"type": "array", "items": _vec}
_ivec = {"type": "array", "items": {"type": "integer"}}

FORECAST_SCHEMA = {
    "type": ["object", "null"],
    "required": ["times", "actual", "predicted", "rmse", "mae", "mape", "natural"],
    "properties": {
        "times": _ivec,
        "actual": _vec,
        "predicted": _vec,
        "rmse": _num,
        "mae": _num,
        "mape": _num,
        "natural": {
            "type": ["object", "null"],
            "required": ["actual", "predicted", "rmse", "mae", "mape"],
        },
    },
}

DIAGNOSTICS_SCHEMA = {
    "type": ["object", "null"],
    "required": ["lag", "acf_lags", "band", "pooled_acf", "segments"],
    "properties": {
        "lag": {"type": "integer"},
        "acf_lags": {"type": "integer"},
        "band": {"type": "number"},
        "pooled_acf": _vec,
        "segments": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["segment", "first_year", "last_year", "acf", "Q", "df", "p_values"],
                "properties": {"acf": _mat, "Q": _vec, "df": _ivec, "p_values": _vec},
            },
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "format", "version", "command", "series", "segmentation", "criterion",
        "models", "residuals", "forecast", "diagnostics", "metadata",
    ],
    "properties": {
        "format": {"const": FORMAT},
        "version": {"const": VERSION},
        "command": {"type": "string"},
        "series": {
            "type": "object",
            "required": ["period", "start_year", "n_years", "n_obs"],
        },
        "segmentation": {
            "type": "object",
            "required": [
                "m", "mrl", "n_years", "tau", "changepoint_years",
                "last_years_before_change", "segments",
            ],
            "properties": {"tau": _ivec, "changepoint_years": _ivec, "last_years_before_change": _ivec},
        },
        "criterion": {
            "type": "object",
            "required": ["g", "fitness", "feasible"],
            "properties": {"g": _num, "fitness": _num, "feasible": {"type": "boolean"}},
        },
        "models": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["segment", "first_year", "last_year", "a", "b", "mu", "phi", "delta", "sigma2", "n_obs"],
                "properties": {"mu": _vec, "phi": _mat, "sigma2": _vec, "n_obs": _ivec},
            },
        },
        "residuals": _vec,
        "forecast": FORECAST_SCHEMA,
        "diagnostics": DIAGNOSTICS_SCHEMA,
        "metadata": {"type": "object"},
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "command", "rows", "reports"],
    "properties": {
        "command": {"const": "sweep"},
        "rows": {"type": "array", "items": {"type": "object"}},
        "reports": {"type": "array", "items": REPORT_SCHEMA},
    },
}


def _f(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fl(a):
    return [_f(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _fm(a):
    return [_fl(row) for row in np.asarray(a, dtype=float)]


def _arr(v, inf=False):
    fill = math.inf if inf else math.nan
    return np.array([fill if x is None else x for x in v], dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _f(obj)
    return obj


def forecast_to_dict(fc: ForecastReport | None):
    if fc is None:
        return None
    natural = None
    if fc.natural_actual is not None:
        natural = {
            "actual": _fl(fc.natural_actual),
            "predicted": _fl(fc.natural_predicted),
            "rmse": _f(fc.natural_rmse),
            "mae": _f(fc.natural_mae),
            "mape": _f(fc.natural_mape),
        }
    return {
        "times": [int(t) for t in fc.times],
        "actual": _fl(fc.actual),
        "predicted": _fl(fc.predicted),
        "rmse": _f(fc.rmse),
        "mae": _f(fc.mae),
        "mape": _f(fc.mape),
        "natural": natural,
    }


def forecast_from_dict(d) -> ForecastReport | None:
    if d is None:
        return None
    nat = d["natural"] or {}
    return ForecastReport(
        times=np.array(d["times"], dtype=int),
        actual=_arr(d["actual"]),
        predicted=_arr(d["predicted"]),
        rmse=d["rmse"],
        mae=d["mae"],
        mape=d["mape"],
        natural_actual=_arr(nat["actual"]) if nat else None,
        natural_predicted=_arr(nat["predicted"]) if nat else None,
        natural_rmse=nat.get("rmse"),
        natural_mae=nat.get("mae"),
        natural_mape=nat.get("mape"),
    )


def diagnostics_to_dict(dg: DiagnosticsReport | None):
    if dg is None:
        return None
    return {
        "lag": int(dg.lag),
        "acf_lags": int(dg.acf_lags),
        "band": _f(dg.band),
        "pooled_acf": _fl(dg.pooled_acf),
        "segments": [
            {
                "segment": sd.segment,
                "first_year": sd.first_year,
                "last_year": sd.last_year,
                "acf": _fm(sd.acf),
                "Q": _fl(sd.Q),
                "df": [int(v) for v in sd.df],
                "p_values": _fl(sd.p_values),
            }
            for sd in dg.segments
        ],
    }


def diagnostics_from_dict(d) -> DiagnosticsReport | None:
    if d is None:
        return None
    segs = tuple(
        SegmentDiagnostics(
            segment=sd["segment"],
            first_year=sd["first_year"],
            last_year=sd["last_year"],
            acf=np.array([_arr(row) for row in sd["acf"]]).reshape(len(sd["acf"]), -1),
            Q=_arr(sd["Q"]),
            df=np.array(sd["df"], dtype=int),
            p_values=_arr(sd["p_values"]),
        )
        for sd in d["segments"]
    )
    return DiagnosticsReport(d["lag"], d["acf_lags"], _arr(d["pooled_acf"]), d["band"], segs)


def report_to_dict(report: FitReport, command: str = "fit") -> dict:
    seg = report.segmentation
    label = report.start_year - 1
    return {
        "format": FORMAT,
        "version": VERSION,
        "command": command,
        "series": {
            "period": report.period,
            "start_year": report.start_year,
            "n_years": seg.N,
            "n_obs": seg.N * report.period,
        },
        "segmentation": {
            "m": seg.m,
            "mrl": seg.mrl,
            "n_years": seg.N,
            "tau": list(seg.tau),
            "changepoint_years": report.changepoint_years(),
            "last_years_before_change": report.last_years_before_change(),
            "segments": [
                {
                    "segment": j,
                    "first_year": yrs.start,
                    "last_year": yrs.stop - 1,
                    "first_label": label + yrs.start,
                    "last_label": label + yrs.stop - 1,
                }
                for j, yrs in ((j, seg.segment_years(j)) for j in range(1, seg.M + 1))
            ],
        },
        "criterion": {
            "g": _f(report.g),
            "fitness": _f(report.fitness),
            "feasible": report.feasible,
        },
        "models": [
            {
                "segment": j,
                "first_year": m.first_year,
                "last_year": m.last_year,
                "a": _f(m.a),
                "b": _f(m.b),
                "mu": _fl(m.mu),
                "phi": _fm(m.phi),
                "delta": [[int(v) for v in row] for row in m.delta],
                "sigma2": _fl(m.sigma2),
                "n_obs": [int(v) for v in m.n_obs],
                "degenerate": m.degenerate,
            }
            for j, m in enumerate(report.models, start=1)
        ],
        "residuals": _fl(report.residuals),
        "forecast": forecast_to_dict(report.forecast),
        "diagnostics": diagnostics_to_dict(report.diagnostics),
        "metadata": _jsonable(report.metadata),
    }


def report_from_dict(d: dict) -> FitReport:
    validate(d)
    sg = d["segmentation"]
    models = tuple(
        SegmentModel(
            first_year=m["first_year"],
            last_year=m["last_year"],
            a=m["a"],
            b=m["b"],
            mu=_arr(m["mu"]),
            phi=np.array([_arr(r) for r in m["phi"]]).reshape(len(m["phi"]), -1),
            delta=np.array(m["delta"], dtype=bool).reshape(len(m["delta"]), -1),
            sigma2=_arr(m["sigma2"]),
            n_obs=np.array(m["n_obs"], dtype=int),
        )
        for m in d["models"]
    )
    crit = d["criterion"]
    return FitReport(
        segmentation=Segmentation(sg["n_years"], tuple(sg["tau"]), sg["mrl"]),
        models=models,
        g=math.inf if crit["g"] is None else crit["g"],
        fitness=crit["fitness"],
        residuals=_arr(d["residuals"]),
        period=d["series"]["period"],
        start_year=d["series"]["start_year"],
        forecast=forecast_from_dict(d["forecast"]),
        diagnostics=diagnostics_from_dict(d["diagnostics"]),
        metadata=d["metadata"],
    )


def validate(d: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``d`` is not a fit report."""
    jsonschema.validate(d, REPORT_SCHEMA)


def dumps(d: dict) -> str:
    return json.dumps(d, indent=2, allow_nan=False) + "\n"


def dumps_report(report: FitReport, command: str = "fit") -> str:
    return dumps(report_to_dict(report, command))


def loads_report(text: str) -> FitReport:
    return report_from_dict(json.loads(text))
