"""CSV ingestion and data transforms."""

from __future__ import annotations

import csv
import re
import warnings
from pathlib import Path

import numpy as np

from ..core import ConfigError, DomainError, IngestionError, PeriodicSeries

_DATE = re.compile(r"^\s*(\d{1,4})-(\d{1,2})\s*$")


class IngestionWarning(UserWarning):
    pass


def _is_header(row) -> bool:
    first = row[0].strip()
    return not (first.lstrip("-").isdigit() or _DATE.match(first))


def _parse_rows(rows, period: int):
    """Yield ``(line, year, season, value)`` from raw CSV rows."""
    for line, row in rows:
        cells = [c.strip() for c in row]
        if len(cells) == 3:
            year_s, season_s, value_s = cells
            try:
                year, season = int(year_s), int(season_s)
            except ValueError:
                raise IngestionError(f"line {line}: year and season must be integers") from None
        elif len(cells) == 2:
            match = _DATE.match(cells[0])
            if not match:
                raise IngestionError(f"line {line}: expected a YYYY-MM date, got {cells[0]!r}")
            if period != 12:
                raise IngestionError(f"line {line}: YYYY-MM dates require period 12")
            year, season = int(match.group(1)), int(match.group(2))
            value_s = cells[1]
        else:
            raise IngestionError(f"line {line}: expected 2 or 3 columns, got {len(cells)}")
        if not 1 <= season <= period:
            raise IngestionError(f"line {line}: season {season} outside 1..{period}")
        try:
            value = float(value_s)
        except ValueError:
            raise IngestionError(f"line {line}: non-numeric value {value_s!r}") from None
        if not np.isfinite(value):
            raise IngestionError(f"line {line}: non-finite value {value_s!r}")
        yield line, year, season, value


def load_csv(path, period: int = 12) -> PeriodicSeries:
    """Read ``year,season,value`` or ``YYYY-MM,value`` rows into whole years.

    Rows must be sorted without gaps or duplicates.  Partial years at either
    end are dropped with an :class:`IngestionWarning`.
    """
    if period < 1:
        raise ConfigError(f"period must be positive, got {period}")
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            raw = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in row)]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None
    if raw and _is_header(raw[0][1]):
        raw = raw[1:]
    records = list(_parse_rows(raw, period))
    if not records:
        raise IngestionError(f"{path} contains no data rows")
    for (_, y0, k0, _), (line, y1, k1, _) in zip(records, records[1:]):
        here, prev = y1 * period + k1, y0 * period + k0
        if here == prev:
            raise IngestionError(f"line {line}: duplicate entry for {y1}/{k1}")
        if here < prev:
            raise IngestionError(f"line {line}: rows are not sorted by time")
        if here != prev + 1:
            raise IngestionError(f"line {line}: gap before {y1}/{k1}")
    head = next(i for i, r in enumerate(records) if r[2] == 1) if any(r[2] == 1 for r in records) else len(records)
    tail = len(records)
    while tail > head and records[tail - 1][2] != period:
        tail -= 1
    if head or tail < len(records):
        warnings.warn(
            f"trimmed {head} leading and {len(records) - tail} trailing observations "
            "to keep whole years",
            IngestionWarning,
            stacklevel=2,
        )
    kept = records[head:tail]
    if not kept:
        raise IngestionError(f"{path} does not contain a single whole year")
    return PeriodicSeries([r[3] for r in kept], period, kept[0][1])


def apply_transform(series: PeriodicSeries, transform: str) -> PeriodicSeries:
    """Elementwise natural log (``"log"``) or identity (``"none"``)."""
    if transform == "none":
        return series
    if transform != "log":
        raise ConfigError(f"unknown transform {transform!r}")
    bad = np.flatnonzero(series.values <= 0)
    if bad.size:
        listed = ", ".join(str(i + 1) for i in bad[:10])
        more = "" if bad.size <= 10 else f" (+{bad.size - 10} more)"
        raise IngestionError(f"log transform needs positive values; offending observations: {listed}{more}")
    return PeriodicSeries(np.log(series.values), series.period, series.start_year)


def write_csv(series: PeriodicSeries, dest) -> None:
    """Write ``year,season,value`` rows with round-trippable floats.

    ``dest`` is a path or an open text stream.
    """
    if hasattr(dest, "write"):
        _write_rows(series, dest)
        return
    with Path(dest).open("w", newline="") as fh:
        _write_rows(series, fh)


def _write_rows(series: PeriodicSeries, fh) -> None:
    s = series.period
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["year", "season", "value"])
    for i, v in enumerate(series.values):
        w.writerow([series.start_year + i // s, i % s + 1, repr(float(v))])


def split_holdout(series: PeriodicSeries, holdout_years: int) -> PeriodicSeries:
    if holdout_years < 0:
        raise ConfigError("holdout years must be nonnegative")
    if holdout_years == 0:
        return series
    if holdout_years >= series.N:
        raise ConfigError(f"holdout of {holdout_years} years leaves nothing of {series.N} years")
    try:
        return series.head_years(series.N - holdout_years)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
