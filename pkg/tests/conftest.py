import numpy as np
import pytest

from netsir import make_geometric, make_poisson
from netsir.degree import InitialInfection
from netsir.model import ModelParams


@pytest.fixture(scope="session")
def poisson5():
    return make_poisson(5.0, 15)


@pytest.fixture(scope="session")
def poisson5_wide():
    return make_poisson(5.0, 20)


@pytest.fixture(scope="session")
def geometric6():
    return make_geometric(1.0 / 6.0, 50)


@pytest.fixture(scope="session")
def table1_params():
    return ModelParams(beta=1.5, gamma=1.0, omega=2.0)


@pytest.fixture(scope="session")
def temporal_params():
    return ModelParams(beta=1.5, gamma=1.0, omega=1.0)


@pytest.fixture(scope="session")
def eps05(poisson5):
    return InitialInfection.proportional(poisson5, 0.05)


def interior_state(dist, init, params, t=0.4):
    """A strictly interior deterministic state for derivative checks."""
    from netsir.deterministic import solve_realtime

    sol = solve_realtime(dist, init, params, t)
    return sol.eval(t)
