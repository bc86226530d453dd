import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hardylab.grid import Grid

settings.register_profile(
    "hardylab", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("hardylab")


@pytest.fixture(scope="session")
def grid():
    return Grid(20.0, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
