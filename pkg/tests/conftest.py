import logging

import numpy as np
import pytest

from edgesq.core import PointSet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_geometry_warnings(caplog):
    # degenerate-position and duplicate warnings are expected on lattice inputs
    caplog.set_level(logging.ERROR, logger="edgesq")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def uniform(n, d, seed):
    return PointSet(np.random.default_rng(seed).random((n, d)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
