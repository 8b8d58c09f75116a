"""Acceptance checks with pinned tolerances.

Each test appends one PASS/FAIL/SKIP line to the "acceptance criteria"
section of the terminal summary.  The two river checks need the monthly
flow files, supplied as CSV (``year,month,value`` or ``YYYY-MM,value``)
through ``PARCHANGE_SAUGEEN_CSV`` / ``PARCHANGE_SASKATCHEWAN_CSV`` or as
``tests/data/saugeen.csv`` / ``tests/data/saskatchewan.csv``.
"""

import contextlib
import io
import math
import os
import time
from collections import Counter

import numpy as np
import pytest

from parchange.app.cli import main
from parchange.app.io import load_csv
from parchange.app.workflow import RunConfig, fit_series, load_series
from parchange.core import PeriodicSeries, Segmentation
from parchange.criterion import CriterionConfig, score_candidate
from parchange.estimation import DesignSystem, estimate_phi
from parchange.evaluation import accuracy_measures, chi2_survival, portmanteau, seasonal_acf
from parchange.generator import generate, mean_shift_spec
from parchange.optimizer import GaConfig, run_ga

from conftest import ACCEPTANCE_LINES

DATA = os.path.join(os.path.dirname(__file__), "data")


def record(number, title, ok, detail):
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {number}. {title}: {detail}")
    assert ok, detail


def skip(number, title, reason):
    ACCEPTANCE_LINES.append(f"[SKIP] {number}. {title}: {reason}")
    pytest.skip(reason)


def info(number, text):
    ACCEPTANCE_LINES.append(f"       {number}. (info) {text}")


def test_1_restricted_estimator_oracle():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst, zeros_exact = 0.0, True
    for _ in range(1000):
        p = int(rng.integers(1, 4))
        n = int(rng.integers(p + 2, 80))
        Z, z = rng.standard_normal((n, p)), rng.standard_normal(n)
        delta = rng.integers(0, 2, p).astype(bool)
        phi = estimate_phi(DesignSystem(Z, z, np.arange(1, n + 1), 1, 1), delta)
        ref = np.zeros(p)
        if delta.any():
            ref[delta] = np.linalg.lstsq(Z[:, delta], z, rcond=None)[0]
        worst = max(worst, float(np.max(np.abs(phi - ref))))
        zeros_exact &= bool(np.all(phi[~delta] == 0.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and zeros_exact and elapsed < 10
    record(1, "restricted LS vs subset OLS", ok,
           f"max abs err {worst:.2e} (<= 1e-8), excluded exactly 0: {zeros_exact}, {elapsed:.2f}s (< 10s)")


@pytest.mark.slow
def test_2_ga_matches_exhaustive():
    crit = CriterionConfig(p=1, mrl=5, m_max=1)
    N = 20
    # placements reachable by the chromosome encoding: tau in mrl+1 .. N-mrl
    encodable = [Segmentation(N, (), 5)] + [Segmentation(N, (t,), 5) for t in range(6, N - 5 + 1)]
    start = time.perf_counter()
    hits = hits_all = 0
    for seed in range(100):
        series = PeriodicSeries(np.random.default_rng(seed).standard_normal(N * 4), 4)
        g_enc = min(score_candidate(series, seg, crit).value.g for seg in encodable)
        g_all = min(g_enc, score_candidate(series, Segmentation(N, (N - 4,), 5), crit).value.g)
        best = run_ga(series, GaConfig(seed=seed), crit).g
        hits += best == g_enc
        hits_all += best == g_all
    elapsed = time.perf_counter() - start
    info(2, f"against every mrl-legal placement (tau up to N+1-mrl): {hits_all}/100")
    record(2, "HGA vs exhaustive optimum", hits >= 95 and elapsed < 60,
           f"{hits}/100 runs at the optimum over {len(encodable)} candidates (>= 95), {elapsed:.1f}s (< 60s)")


@pytest.mark.slow
def test_3_changepoint_recovery():
    crit = CriterionConfig(p=1, mrl=5, m_max=1)
    detected = []
    for seed in range(100):
        series = generate(mean_shift_spec(12, 60, 30, 3.0, seed=seed))
        report = run_ga(series, GaConfig(seed=seed), crit)
        detected.append(report.segmentation.tau[0] if report.segmentation.m else None)
    close = sum(t is not None and abs(t - 30) <= 1 for t in detected)
    mode = Counter(detected).most_common(1)[0][0]
    record(3, "planted mean-shift recovery", close >= 90 and abs(mode - 30) <= 1,
           f"{close}/100 runs within +-1 year of year 30 (>= 90), modal year {mode}")


def test_4_portmanteau_calibration():
    rng = np.random.default_rng(4)
    N, s, L = 50, 12, 15
    rejections = total = 0
    for _ in range(1000):
        r = seasonal_acf(rng.standard_normal(N * s), s, L)
        for k in range(1, s + 1):
            _, pv = portmanteau(r[k - 1], k, L, N, s, pk=0)
            rejections += pv < 0.05
            total += 1
    rate = rejections / total
    xs = np.linspace(0.0, 60.0, 601)
    closed = max(abs(chi2_survival(x, 2) - math.exp(-x / 2)) for x in xs)
    record(4, "portmanteau calibration", 0.03 <= rate <= 0.07 and closed <= 1e-12,
           f"rejection {rate:.4f} over {total} tests (in [0.03, 0.07]), df=2 closed-form err {closed:.1e} (<= 1e-12)")


def test_5_forecast_measures():
    rmse, mae, mape = accuracy_measures([1.0, 2.0], [2.0, 4.0])
    errs = (abs(mae - 1.5), abs(rmse - math.sqrt(2.5)), abs(mape - 100.0))
    record(5, "forecast measure exactness", max(errs) <= 1e-12,
           f"MAE {mae!r}, RMSE {rmse!r}, MAPE {mape!r}; max err {max(errs):.1e} (<= 1e-12)")


def river_csv(name):
    path = os.environ.get(f"PARCHANGE_{name.upper()}_CSV") or os.path.join(DATA, f"{name}.csv")
    return path if os.path.exists(path) else None


def river_fit(path, m, p, mrl=7):
    cfg = RunConfig(input=path, period=12, max_order=p, mrl=mrl, max_changepoints=m, ic=2.0,
                    transform="log", holdout_years=1, seed=0)
    return fit_series(load_series(cfg), cfg)


def test_6_saugeen():
    title = "Saugeen reproduction"
    path = river_csv("saugeen")
    if path is None:
        skip(6, title, "monthly flow file not available (set PARCHANGE_SAUGEEN_CSV)")
    raw = load_csv(path)
    if (raw.start_year, raw.N) != (1915, 62):
        info(6, f"file covers {raw.start_year}.. with {raw.N} years, expected 1915..1976")
    with_cp, without = river_fit(path, 1, 1), river_fit(path, 0, 1)
    # the reference segmentation for this river starts the new regime in 1970
    years = with_cp.changepoint_years()
    mae, nat = with_cp.forecast.mae, with_cp.forecast.natural_mae
    ok = (
        years == [1970]
        and abs(mae / 0.2869 - 1) <= 0.15
        and abs(nat / 9.4827 - 1) <= 0.15
        and mae < without.forecast.mae
    )
    record(6, title, ok,
           f"changepoint {years} (want [1970]), log MAE {mae:.4f} (0.2869 +-15%), "
           f"natural MAE {nat:.4f} (9.4827 +-15%), no-changepoint MAE {without.forecast.mae:.4f} (must be larger)")


def test_7_saskatchewan():
    title = "Saskatchewan reproduction"
    path = river_csv("saskatchewan")
    if path is None:
        skip(7, title, "monthly flow file not available (set PARCHANGE_SASKATCHEWAN_CSV)")
    base = river_fit(path, 0, 3).forecast
    models = {(m, p): river_fit(path, m, p) for m, p in [(1, 3), (2, 3), (3, 2)]}
    # the reference segmentation for this river ends the old regime in 1968
    years = models[(3, 2)].last_years_before_change()
    beats = all(
        r.forecast.rmse < base.rmse and r.forecast.mae < base.mae and r.forecast.mape < base.mape
        for r in models.values()
    )
    for key, r in models.items():
        info(7, f"PAR({key[0]};{key[1]};7) last years before change {r.last_years_before_change()}, "
                f"MAE {r.forecast.mae:.4f}")
    record(7, title, 1968 in years and beats,
           f"PAR(3;2;7) years {years} (want 1968 among them), all m>=1 beat PAR(0;3) on RMSE/MAE/MAPE: {beats}")


def test_8_determinism(tmp_path):
    series_path = tmp_path / "sim.csv"
    assert main(["simulate", "--years", "40", "--changepoint", "20", "--level", "20",
                 "--seed", "8", "--output", str(series_path)]) == 0
    outputs = []
    for workers in ("1", "1", "4"):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["fit", "--input", str(series_path), "--mrl", "5", "--generations", "60",
                         "--seed", "11", "--workers", workers])
        assert code == 0
        outputs.append(buf.getvalue().encode())
    same = outputs[0] == outputs[1] == outputs[2]
    record(8, "byte-identical reports", same,
           f"3 runs (workers 1, 1, 4), {len(outputs[0])} bytes each, identical: {same}")
