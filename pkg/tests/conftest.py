import numpy as np
import pytest

from eulerpoisson.constitutive import PressureLaw
from eulerpoisson.spectral import Grid


@pytest.fixture(scope="session")
def law():
    return PressureLaw.isothermal(1.0)


@pytest.fixture(scope="session")
def grid():
    """Small periodic grid for unit tests."""
    return Grid(80.0, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import summary_lines
    except ImportError:
        return
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
