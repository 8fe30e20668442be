import functools

import numpy as np
import pytest

from dfrc.cli import run_method
from dfrc.scenario_io import load_scenario

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def bundled(name):
    return load_scenario(name)


@functools.lru_cache(maxsize=None)
def designed(name, method):
    """Design reports are cached per session; tests must not mutate them."""
    return run_method(bundled(name), method)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
