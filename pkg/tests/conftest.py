import numpy as np
import pytest
from hypothesis import settings

from laserprop import build_problem, make_grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ex1():
    return build_problem("ex1")


@pytest.fixture(scope="session")
def ex1_state(ex1):
    return ex1.initial_state()


@pytest.fixture
def grid8():
    return make_grid([(-2.0, 2.0)], 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
