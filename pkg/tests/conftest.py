import math

import numpy as np
import pytest

from era_beam.checks import random_far_scenario
from era_beam.em_response import FarTarget
from era_beam.geometry import ArrayGeometry
from era_beam.harmonics import TruncationSpec
from era_beam.synthesis import Sample, Scenario

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def single_far(nx=1, ny=1, L=4, theta=0.6, phi=0.4, desired=1.0, weight=1.0, power=4 * math.pi):
    g = ArrayGeometry(nx, ny, 0.005, 0.01)
    return Scenario(g, TruncationSpec(L), (Sample(FarTarget(theta, phi), desired, weight),), power)


@pytest.fixture
def small_scenario():
    return random_far_scenario(np.random.default_rng(42), 2, 2, 2, 5)
