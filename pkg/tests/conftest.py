import math

import numpy as np
import pytest

from koranyi.coords import RingSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_ring():
    return RingSpec(1.0, math.e, 1.0, 1.0)


@pytest.fixture
def ellipse_ring():
    return RingSpec(1.0, math.e, 2.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
