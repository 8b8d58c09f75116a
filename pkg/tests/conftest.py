import numpy as np
import pytest

from parchange.core import PeriodicSeries

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def white_series(rng, n_years, s, scale=1.0, start_year=1):
    return PeriodicSeries(rng.standard_normal(n_years * s) * scale, s, start_year)
