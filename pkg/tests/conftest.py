import numpy as np
import pytest

from qcurve.grid import RadialGrid
from qcurve.nonlinear import build_machinery


@pytest.fixture(scope="session")
def grid512():
    return RadialGrid(12.0, 512)


@pytest.fixture(scope="session")
def grid1024():
    return RadialGrid(12.0, 1024)


@pytest.fixture(scope="session")
def grid2048():
    return RadialGrid(12.0, 2048)


@pytest.fixture(scope="session")
def grid4096():
    return RadialGrid(12.0, 4096)


@pytest.fixture(scope="session")
def machinery4(grid2048):
    return build_machinery(4, grid2048)


@pytest.fixture(scope="session")
def machinery5(grid2048):
    return build_machinery(5, grid2048)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
