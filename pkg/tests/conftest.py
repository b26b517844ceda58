import sys

import numpy as np
import pytest

from seirwave.core import FixedRates, PopulationConfig
from seirwave.fitting import TABLE_I_FITTED, ModelContext, params_from_values

INDIA_N = 1.38e9


@pytest.fixture
def rates():
    return FixedRates()


@pytest.fixture
def pop():
    return PopulationConfig(INDIA_N)


@pytest.fixture
def table_params():
    return params_from_values(TABLE_I_FITTED)


@pytest.fixture
def ctx():
    return ModelContext()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def round_trip():
    """Zero-noise 585-day series from the reference parameters, fitted from the Table I start."""
    from seirwave.fitting import TABLE_I_SPECS, ObservedSeries, fit, model_series

    ctx = ModelContext()
    obs = ObservedSeries(model_series(params_from_values(TABLE_I_FITTED), 585, "cumulative_deaths", ctx))
    return obs, fit(TABLE_I_SPECS, obs, ctx)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
