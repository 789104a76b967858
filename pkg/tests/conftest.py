"""
Shared pytest fixtures and configuration for all tests
"""
import pytest

from timechange_cn.config import Config
from timechange_cn.mesh import build_space_grid, refinement_ladder
from timechange_cn.models import BSParams, PayoffKind, PenaltyConfig


# ============================================================================
# Configuration Fixtures
# ============================================================================


@pytest.fixture(scope="function")
def test_config(tmp_path):
    """Sequential config writing into a temporary directory"""
    return Config.for_testing(output_dir=tmp_path)


@pytest.fixture(scope="function")
def small_heat_config(test_config):
    """Heat studies small enough for unit tests (N = 50, 100, 200 on +-6)"""
    test_config.HEAT_BASE_N = 50
    test_config.HEAT_HALF_WIDTH = 6.0
    return test_config


# ============================================================================
# Grid Fixtures
# ============================================================================


@pytest.fixture
def heat_grid_pair():
    """(SpaceGrid, TimeGrid) with lambda = 0.5, N = 20, h = 0.1 on [-4, 4]"""
    return refinement_ladder(0.5, 1, base_N=20, half_width=4.0)[0]


@pytest.fixture
def s_grid():
    """S-grid on [0, 200] with h = 0.5"""
    return build_space_grid(0.0, 200.0, 400)


# ============================================================================
# Market Fixtures
# ============================================================================


@pytest.fixture
def call_params():
    """sigma = 0.2, r = 0.05, K = 100, T = 0.25 call"""
    return BSParams(sigma=0.2, r=0.05, K=100.0, T=0.25)


@pytest.fixture
def put_params():
    return BSParams(sigma=0.2, r=0.05, K=100.0, T=0.25, payoff=PayoffKind.PUT)


@pytest.fixture
def penalty():
    return PenaltyConfig(rho=1.0e6, tol=1.0e-6, max_iter=50)
