import pytest

from gqg.models import Grid, ModelParams


@pytest.fixture
def small_grid():
    """N = 8 lattice on the minimal dealiased grid"""
    return Grid(N=8, M=18)


@pytest.fixture
def subcritical_params():
    """alpha = beta = 3/4"""
    return ModelParams(alpha=0.75, beta=0.75)


@pytest.fixture
def supercritical_params():
    """alpha = 0.2, beta = 0.6"""
    return ModelParams(alpha=0.2, beta=0.6)
