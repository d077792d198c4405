import numpy as np
import pytest

from nabla_fdm import SignalTrace, fit_operator, fit_with_integrator, make_grid

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def grid():
    return make_grid()


@pytest.fixture(scope="session")
def fit_half(grid):
    """Default order-0.5 approximant (N=20, T=8)."""
    return fit_operator(0.5, grid, 20, 8)


@pytest.fixture(scope="session")
def fit_half_integrator(grid):
    return fit_with_integrator(0.5, grid, 20, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def trace(values, a=0):
    return SignalTrace(a, np.asarray(values, dtype=float))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
