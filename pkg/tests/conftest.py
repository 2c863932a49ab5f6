import numpy as np
import pytest

from oversmoothing.forward import ProblemSetup, make_noise
from oversmoothing.grid import Grid

ACCEPTANCE_LINES = []


@pytest.fixture
def grid():
    return Grid(100)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def setup03():
    return ProblemSetup.create(0.3)


@pytest.fixture(scope="session")
def setup07():
    return ProblemSetup.create(0.7)


@pytest.fixture(scope="session")
def noise03(setup03):
    return make_noise(setup03, 0.0125, 1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
