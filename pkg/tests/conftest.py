import pytest

from darcysplit.mesh import generate_annulus, generate_rectangle, generate_square_with_holes


@pytest.fixture(scope="session")
def annulus_coarse():
    return generate_annulus(1.0, 4.0, 0.5)


@pytest.fixture(scope="session")
def annulus_medium():
    return generate_annulus(1.0, 4.0, 0.25)


@pytest.fixture(scope="session")
def square_coarse():
    return generate_square_with_holes(0.65, 0.1, 0.02, 0.08)


@pytest.fixture(scope="session")
def unit_square():
    return generate_rectangle(0.0, 1.0, 0.0, 1.0, 6, 6)
