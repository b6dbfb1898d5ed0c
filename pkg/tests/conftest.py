"""Shared fixtures: parameters, grids and one converged ground state per session."""
import numpy as np
import pytest

from app.models.grid import make_grid
from app.schemas.params import PhysParams
from app.utils.groundstate import compute_ground_state


@pytest.fixture(scope="session")
def params():
    """Focusing reference parameters alpha = 1/2, rho = 1/2, p = 3."""
    return PhysParams(alpha=0.5, rho=0.5, p=3.0, kappa=-1)


@pytest.fixture(scope="session")
def defocusing(params):
    return params.model_copy(update={"kappa": 1})


@pytest.fixture(scope="session")
def ground_state(params):
    """Ground state on the desk-scale grid (2048 radial nodes, r_max = 16)."""
    return compute_ground_state(params, make_grid(2048, 16.0, 1), tol=1e-12)


@pytest.fixture
def battery_grid():
    return make_grid(512, 12.0, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
