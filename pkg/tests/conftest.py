import numpy as np
import pytest

from gchoquard.core.geometry import ProblemParams
from gchoquard.core.grid_ops import build_grid
from gchoquard.core.nonlocal_ops import build_kernel
from gchoquard.core.solver import SolverConfig, solve_ground_state


@pytest.fixture(scope='session')
def ref_params():
    """N_gamma = 5, admissible window (9/5, 3), (c_A, c_B) = (1/4, 3/4)"""
    return ProblemParams(m=1, ell=2, gamma=1.0, mu=1.0, p=2.0)


@pytest.fixture(scope='session')
def small_grid(ref_params):
    return build_grid(16, 16, 8.0, 8.0, ref_params)


@pytest.fixture(scope='session')
def small_kernel(small_grid, ref_params):
    return build_kernel(small_grid, ref_params, n_theta=16)


@pytest.fixture(scope='session')
def small_ground_state(ref_params, small_grid, small_kernel):
    return solve_ground_state(ref_params, small_grid, small_kernel, SolverConfig(tol=1e-7))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def reference_run(ref_params):
    """Kernel and ground state of the reference problem on 48x48, R = S = 12"""
    grid = build_grid(48, 48, 12.0, 12.0, ref_params)
    kernel = build_kernel(grid, ref_params, n_theta=32)
    return kernel, solve_ground_state(ref_params, grid, kernel)
