import os
import time
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# lines collected by the acceptance module, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def fast_experiment():
    """The coarse-grid toy experiment (5 instances), shared across modules.

    Returns the table plus its wall-clock time in seconds.
    """
    from ksupport.modelsel import fast_grid, run_experiment

    start = time.perf_counter()
    table = run_experiment(instances=5, base_seed=0, grid=fast_grid())
    return SimpleNamespace(table=table, seconds=time.perf_counter() - start)
