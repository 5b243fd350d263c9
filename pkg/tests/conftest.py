import pytest

from colombeau.asymptotics import EpsilonLadder
from colombeau.genfun import CellGrid, Grid


@pytest.fixture(scope="session")
def ladder():
    return EpsilonLadder.dyadic(2, 18)


@pytest.fixture(scope="session")
def grid():
    return Grid(1, ((-4.0, 4.0),), 1024)


@pytest.fixture(scope="session")
def wide_grid():
    return Grid(1, ((-8.0, 8.0),), 1024)


@pytest.fixture(scope="session")
def cells():
    return CellGrid(((-4.0, 4.0),), (16,))
