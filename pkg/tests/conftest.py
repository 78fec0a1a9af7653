import pytest

from socialfield.grid import Boundary, GridGeometry


@pytest.fixture
def torus10():
    return GridGeometry(10, 10)


@pytest.fixture
def box10():
    return GridGeometry(10, 10, Boundary.CLOSED)
