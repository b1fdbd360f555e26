"""Test configuration for flatcalc.

Pullbacks are expensive to build (seminorm sampling), so the catalog
boundaries are session-scoped and shared read-only across tests.
"""

import numpy as np
import pytest

from src.core.types import BoundaryCondition, BoundarySpec, GridSpec
from src.numerics.boundary import make_boundary
from src.numerics.geometry import PullbackMap
from src.numerics.operators import assemble_laplacian
from src.numerics.spaces import GridFunction, HalfSpaceGrid, build_grid


def make_pullback(name: str, eps: float, **kwargs) -> PullbackMap:
    return PullbackMap.build(make_boundary(BoundarySpec(name=name, eps=eps, **kwargs)))


@pytest.fixture(scope="session")
def zero_pullback() -> PullbackMap:
    """h ≡ 0 in d = 2."""
    return make_pullback("zero", 0.0)


@pytest.fixture(scope="session")
def bump_pullback() -> PullbackMap:
    """The 0.1 bump; its C^{1,1} seminorm estimate is slightly above 1."""
    return make_pullback("bump", 0.1)


@pytest.fixture(scope="session")
def small_bump_pullback() -> PullbackMap:
    """The 0.05 bump, inside the [O] ≤ 1 regime."""
    return make_pullback("bump", 0.05)


@pytest.fixture(scope="session")
def half_bump_pullback() -> PullbackMap:
    """The 0.025 bump, half the amplitude of small_bump_pullback."""
    return make_pullback("bump", 0.025)


@pytest.fixture(scope="session")
def cone_pullback() -> PullbackMap:
    """C^{1,1/2} cone profile."""
    return make_pullback("cone_smoothed", 0.02, holder=0.5)


@pytest.fixture(scope="session")
def fine_grid_1d() -> HalfSpaceGrid:
    """Graded normal grid for quadrature checks."""
    return build_grid(GridSpec(dim=1, x_max=40.0, x1_min=1e-4, max_width=0.02))


@pytest.fixture(scope="session")
def coarse_grid_1d() -> HalfSpaceGrid:
    """Small uniform grid for dense oracles."""
    return build_grid(GridSpec(dim=1, x_max=5.0, x1_min=0.1, max_width=0.1))


@pytest.fixture(scope="session")
def grid_2d() -> HalfSpaceGrid:
    return build_grid(
        GridSpec(dim=2, x_max=6.0, x1_min=1e-3, max_width=0.25, lateral_half_width=4.0, n_lateral=16)
    )


@pytest.fixture
def dirichlet_1d(coarse_grid_1d):
    """μ − Δ_Dir with μ = 1 on the coarse grid."""
    return assemble_laplacian(coarse_grid_1d, BoundaryCondition.DIRICHLET).with_mu(1.0)


@pytest.fixture
def probe(coarse_grid_1d) -> GridFunction:
    rng = np.random.default_rng(7)
    return GridFunction(coarse_grid_1d, rng.standard_normal(coarse_grid_1d.size))


@pytest.fixture
def output_dir(tmp_path):
    """Isolated results directory."""
    path = tmp_path / "results"
    path.mkdir()
    return path
