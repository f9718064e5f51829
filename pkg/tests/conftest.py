import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tvteam.actuation import a4_inc, effectiveness_matrix
from tvteam.scenario import run_scenario


@pytest.fixture(scope="session")
def team():
    return a4_inc()


@pytest.fixture(scope="session")
def M(team):
    return effectiveness_matrix(team)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def run_half(team):
    return run_scenario(team, s_planner=0.5)


@pytest.fixture(scope="session")
def run_full(team):
    return run_scenario(team, s_planner=1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
