"""Command line interface.

Exit status: 0 on success, 2 for ingestion errors, 3 for configuration
errors and 4 when no feasible model could be estimated.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..core import ConfigError, DomainError, IngestionError, Segmentation
from ..generator import GeneratorSpec, RegimeParams, generate, mean_shift_spec
from . import report as rpt
from .io import write_csv
from .workflow import (
    RunConfig,
    add_diagnostics,
    add_forecast,
    fit_series,
    load_series,
    sweep_rows,
    sweep_series,
)

EXIT_OK, EXIT_INGEST, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3, 4


class InfeasibleFit(Exception):
    pass


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV with year,season,value or YYYY-MM,value rows")
    p.add_argument("--period", type=int, default=12)
    p.add_argument("--max-order", type=int, default=1, help="maximum AR order p")
    p.add_argument("--mrl", type=int, default=1, help="minimum regime length in years")
    p.add_argument("--max-changepoints", type=int, default=3)
    p.add_argument("--ic", type=float, default=2.0, help="penalty weight")
    p.add_argument("--beta", type=float, default=1.0, help="fitness scale")
    p.add_argument("--pop-size", type=int, default=50)
    p.add_argument("--generations", type=int, default=None, help="default 200 (hga) or 1000 (sga)")
    p.add_argument("--pc", type=float, default=0.9, help="crossover rate")
    p.add_argument("--pm", type=float, default=None, help="per-bit mutation rate, default 1/length")
    p.add_argument("--elitism", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout-years", type=int, default=1)
    p.add_argument("--transform", choices=("none", "log"), default="log")
    p.add_argument("--mode", choices=("hga", "sga"), default="hga")
    p.add_argument("--portmanteau-lag", type=int, default=15)
    p.add_argument("--acf-lags", type=int, default=36)
    p.add_argument("--th-bits", type=int, default=10, help="bits per changepoint position")
    p.add_argument("--workers", type=int, default=1, help="threads for candidate evaluation")
    p.add_argument("--output", help="report path (default: standard output)")


def _post_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True)
    p.add_argument("--report", required=True, help="report written by 'fit'")
    p.add_argument("--portmanteau-lag", type=int, default=None)
    p.add_argument("--acf-lags", type=int, default=None)
    p.add_argument("--output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parchange",
        description="Changepoint detection and forecasting for periodic autoregressive series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _model_args(sub.add_parser("fit", help="search changepoints, fit, forecast and diagnose"))
    _model_args(sub.add_parser("sweep", help="fit once per maximum changepoint count"))
    _post_args(sub.add_parser("forecast", help="recompute forecasts from a saved report"))
    _post_args(sub.add_parser("diagnose", help="recompute diagnostics from a saved report"))

    sim = sub.add_parser("simulate", help="write a synthetic series as CSV")
    sim.add_argument("--spec", help="JSON generator spec; overrides the shape flags below")
    sim.add_argument("--period", type=int, default=12)
    sim.add_argument("--years", type=int, default=60)
    sim.add_argument("--changepoint", type=int, default=30, help="first year of the new regime")
    sim.add_argument("--shift", type=float, default=3.0, help="mean shift in innovation sd")
    sim.add_argument("--phi", type=float, default=0.3)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--level", type=float, default=0.0, help="constant added to every value")
    sim.add_argument("--start-year", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output", help="CSV path (default: standard output)")
    return parser


def _config(args) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    return RunConfig(**{k: v for k, v in vars(args).items() if k in fields})


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_fit(args) -> int:
    cfg = _config(args)
    report = fit_series(load_series(cfg), cfg)
    _emit(rpt.dumps_report(report, "fit"), args.output)
    if not report.feasible:
        raise InfeasibleFit("no feasible candidate was found")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    reports = sweep_series(load_series(cfg), cfg)
    doc = {
        "format": rpt.FORMAT,
        "version": rpt.VERSION,
        "command": "sweep",
        "rows": rpt._jsonable(sweep_rows(reports)),
        "reports": [rpt.report_to_dict(r, "fit") for r in reports],
    }
    _emit(rpt.dumps(doc), args.output)
    for row in doc["rows"]:
        years = ", ".join(map(str, row["changepoint_years"])) or "/"
        print(
            f"{row['label']:<16} {years:<20} g={row['g']} mae={row['mae']}",
            file=sys.stderr,
        )
    if not any(r.feasible for r in reports):
        raise InfeasibleFit("no feasible candidate was found")
    return EXIT_OK


def _saved(args):
    try:
        report = rpt.loads_report(Path(args.report).read_text())
    except (OSError, ValueError) as exc:
        raise IngestionError(f"cannot read report {args.report}: {exc}") from None
    saved = dict(report.metadata.get("config", {}))
    saved["input"] = args.input
    for key in ("portmanteau_lag", "acf_lags"):
        if getattr(args, key) is not None:
            saved[key] = getattr(args, key)
    cfg = RunConfig(**saved)
    if not report.feasible:
        raise InfeasibleFit("saved report holds no feasible model")
    report = dataclasses.replace(report, metadata={**report.metadata, "config": cfg.echo()})
    return report, cfg


def _cmd_forecast(args) -> int:
    report, cfg = _saved(args)
    report = add_forecast(report, load_series(cfg), cfg)
    _emit(rpt.dumps_report(report, "forecast"), args.output)
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    report, cfg = _saved(args)
    report = add_diagnostics(report, cfg)
    _emit(rpt.dumps_report(report, "diagnose"), args.output)
    return EXIT_OK


def spec_from_json(d: dict) -> GeneratorSpec:
    """Generator spec from ``{"period", "years", "tau", "mrl", "seed", "regimes": [...]}``."""
    try:
        seg = Segmentation(d["years"], tuple(d.get("tau", ())), d.get("mrl", 1))
        regimes = tuple(
            RegimeParams(
                a=r.get("a", 0.0),
                b=r.get("b", 0.0),
                mu=np.asarray(r["mu"], dtype=float),
                phi=np.asarray(r["phi"], dtype=float).reshape(d["period"], -1),
                sigma2=np.asarray(r["sigma2"], dtype=float),
            )
            for r in d["regimes"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid generator spec: {exc}") from None
    return GeneratorSpec(
        d["period"], seg, regimes, seed=d.get("seed", 0),
        burn_in=d.get("burn_in"), start_year=d.get("start_year", 1),
    )


def _cmd_simulate(args) -> int:
    if args.spec:
        try:
            spec = spec_from_json(json.loads(Path(args.spec).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise IngestionError(f"cannot read spec {args.spec}: {exc}") from None
    else:
        spec = mean_shift_spec(
            args.period, args.years, args.changepoint, args.shift, args.phi, args.sigma, args.seed
        )
        spec = dataclasses.replace(spec, start_year=args.start_year)
    series = generate(spec)
    if args.level:
        series = type(series)(series.values + args.level, series.period, series.start_year)
    write_csv(series, args.output or sys.stdout)
    return EXIT_OK


COMMANDS = {
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "forecast": _cmd_forecast,
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except IngestionError as exc:
        print(f"parchange: input error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (ConfigError, DomainError) as exc:
        print(f"parchange: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleFit as exc:
        print(f"parchange: estimation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
