import numpy as np
import pytest

from fofreg import (
    Grid,
    QuadratureWeights,
    bspline_basis,
    make_equidistant_grid,
    quadrature_weights,
)


@pytest.fixture
def unit_grid_100():
    return make_equidistant_grid(100, (0.0, 1.0))


@pytest.fixture
def unit_weights_100(unit_grid_100):
    return quadrature_weights(unit_grid_100)


@pytest.fixture
def t_grid_50():
    return make_equidistant_grid(50, (0.0, 1.0))


@pytest.fixture
def t_weights_50(t_grid_50):
    return quadrature_weights(t_grid_50)


def identity_setup(n: int):
    """Grid/weights/basis triple whose weight matrix and basis are exact identities."""
    from fofreg import BasisMatrix

    # unit weights must sum to the interval length, so the grid lives on [0, n]
    grid = Grid(np.linspace(0.0, n, n, endpoint=False), (0.0, float(n)))
    weights = QuadratureWeights(np.ones(n), grid)
    basis = BasisMatrix(np.eye(n), n, 0, np.arange(n + 1, dtype=float), grid)
    return grid, weights, basis


@pytest.fixture
def cubic_basis_12(unit_grid_100):
    return bspline_basis(unit_grid_100, 12, 3)
