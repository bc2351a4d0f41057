import numpy as np
import pytest

from langmuir_kit.acceptance import canonical_evaluator, fine_curve, vacuum_evaluator
from langmuir_kit.equilibria import canonical_profile, vacuum_profile


@pytest.fixture(scope="session")
def canon():
    return canonical_profile()


@pytest.fixture(scope="session")
def vac():
    return vacuum_profile(1.0)


@pytest.fixture(scope="session")
def ev():
    return canonical_evaluator()


@pytest.fixture(scope="session")
def ev_vac():
    return vacuum_evaluator(1.0)


@pytest.fixture(scope="session")
def curve():
    return fine_curve("canonical")


@pytest.fixture(scope="session")
def curve_vac():
    return fine_curve("vacuum")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
