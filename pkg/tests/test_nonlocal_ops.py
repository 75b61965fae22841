import numpy as np
import pytest

from gchoquard.core.geometry import ProblemParams
from gchoquard.core.grid_ops import RadialField, build_grid, gaussian_bump
from gchoquard.core.nonlocal_ops import (
    _pair_rows_numpy,
    angular_rule,
    build_kernel,
    choquard_potential,
    choquard_term,
    convolve,
    hls_ratio,
    kernel_from_entries,
    kernel_summary,
    kernel_values,
    near_field_entries,
    sphere_averaged_kernel,
)
from gchoquard.utils.errors import (
    DegenerateFieldError,
    GridMismatchError,
    KernelMemoryError,
    ParameterError,
    SingularEvaluationError,
)

from oracles import monte_carlo_sphere_average


def test_angular_rule_moments():
    for d, second_moment in ((2, 0.5), (3, 1.0 / 3.0), (4, 0.25)):
        t, w = angular_rule(d, 8)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        assert float(w @ t) == pytest.approx(0.0, abs=1e-14)
        assert float(w @ t ** 2) == pytest.approx(second_moment, abs=1e-14)
    t, w = angular_rule(1, 8)
    np.testing.assert_array_equal(t, [1.0, -1.0])


def test_newton_shell_average():
    # 1/|x - x'| averaged over |x'| = 3 seen from |x| = 1 in R^3
    params = ProblemParams(m=3, ell=1, gamma=0.0, mu=1.0, p=2.0)
    value = sphere_averaged_kernel(1.0, 0.0, 3.0, 0.0, params, n_theta=32)
    assert value == pytest.approx(1.0 / 3.0, rel=1e-6)


def test_kernel_matches_monte_carlo(ref_params):
    value = sphere_averaged_kernel(1.0, 0.7, 1.5, 1.2, ref_params, n_theta=32)
    mc = monte_carlo_sphere_average(1.0, 0.7, 1.5, 1.2, ref_params.m, ref_params.ell,
                                    ref_params.gamma, ref_params.mu)
    assert value == pytest.approx(mc, rel=2e-3)


def test_kernel_homogeneity(ref_params):
    t = 1.7
    g1 = 1.0 + ref_params.gamma
    k = sphere_averaged_kernel(0.8, 1.1, 2.0, 0.3, ref_params)
    k_t = sphere_averaged_kernel(t * 0.8, t ** g1 * 1.1, t * 2.0, t ** g1 * 0.3, ref_params)
    assert k_t == pytest.approx(t ** -ref_params.mu * k, rel=1e-12)


def test_kernel_symmetry_in_points(ref_params):
    a = sphere_averaged_kernel(0.8, 1.1, 2.0, 0.3, ref_params)
    b = sphere_averaged_kernel(2.0, 0.3, 0.8, 1.1, ref_params)
    assert a == pytest.approx(b, rel=1e-13)


def test_coincident_points(ref_params):
    with pytest.raises(SingularEvaluationError):
        sphere_averaged_kernel(1.0, 1.0, 1.0, 1.0, ref_params)
    cell_value = sphere_averaged_kernel(1.0, 1.0, 1.0, 1.0, ref_params, cell=(0.5, 0.5))
    assert np.isfinite(cell_value) and cell_value > 0.0
    with pytest.raises(ParameterError):
        sphere_averaged_kernel(1.0, 1.0, 1.0, 1.0, ref_params, n_theta=2)


def test_dense_kernel_is_symmetric_and_positive(small_kernel):
    K = small_kernel.entries
    assert np.array_equal(K, K.T)
    assert np.all(K > 0.0)
    assert np.all(np.isfinite(K))
    np.testing.assert_array_equal(np.diagonal(K), small_kernel.self_entries.ravel())


def test_assembly_rows_match_pointwise_values(ref_params, small_grid):
    tx, wx = angular_rule(ref_params.m, 8)
    ty, wy = angular_rule(ref_params.ell, 8)
    g = small_grid
    rows = _pair_rows_numpy(g.r_nodes, g.s_nodes, tx, wx, ty, wy, ref_params.gamma,
                            ref_params.mu, 2, 4, 0)
    for a, i in enumerate((2, 3)):
        for i2 in (0, 5, 15):
            for j, j2 in ((0, 1), (7, 3), (15, 15)):
                if (i, j) == (i2, j2):
                    continue
                expected = kernel_values(g.r_nodes[i], g.s_nodes[j], g.r_nodes[i2], g.s_nodes[j2],
                                         (tx, wx), (ty, wy), ref_params.gamma, ref_params.mu)
                assert rows[a, j, i2, j2] == pytest.approx(float(expected), rel=1e-13)


def test_matrix_free_matches_dense(ref_params, small_grid, small_kernel, rng):
    free = build_kernel(small_grid, ref_params, n_theta=16, matrix_free=True, row_block=48)
    assert free.matrix_free
    v = rng.normal(size=small_grid.size)
    dense = small_kernel.apply(v)
    np.testing.assert_allclose(free.apply(v), dense, rtol=1e-12,
                               atol=1e-12 * float((np.abs(small_kernel.entries) @ np.abs(v)).max()))


def test_memory_cap(ref_params, small_grid):
    with pytest.raises(KernelMemoryError):
        build_kernel(small_grid, ref_params, n_theta=8, memory_cap_mb=0.01)
    free = build_kernel(small_grid, ref_params, n_theta=8, matrix_free=True, memory_cap_mb=0.01)
    assert free.entries is None


def test_choquard_term_homogeneity(ref_params, small_grid, small_kernel):
    u = gaussian_bump(small_grid, ref_params)
    D = choquard_term(small_kernel, u, ref_params)
    assert D > 0.0
    assert choquard_term(small_kernel, u.scaled(2.0), ref_params) == pytest.approx(
        2.0 ** (2.0 * ref_params.p) * D, rel=1e-13)
    K = choquard_potential(small_kernel, u, ref_params)
    assert float(np.sum(small_grid.w * K.values * u.values ** 2)) == pytest.approx(D, rel=1e-13)
    assert hls_ratio(u.scaled(3.0), small_kernel, ref_params) == pytest.approx(
        hls_ratio(u, small_kernel, ref_params), rel=1e-12)


def test_zero_field_is_degenerate(ref_params, small_grid, small_kernel):
    zero = RadialField(small_grid, np.zeros(small_grid.shape))
    assert choquard_term(small_kernel, zero, ref_params) == 0.0
    with pytest.raises(DegenerateFieldError):
        hls_ratio(zero, small_kernel, ref_params)


def test_kernel_independent_of_p(ref_params, small_grid, small_kernel):
    u = gaussian_bump(small_grid, ref_params)
    other = ref_params.replace(p=2.5)
    # same kernel serves every p
    D = choquard_term(small_kernel, u, other)
    assert D == pytest.approx(float(np.sum(small_grid.w * u.values ** 2.5 *
                                           convolve(small_kernel, u.with_values(u.values ** 2.5)).values)))


def test_mismatched_inputs(ref_params, small_grid, small_kernel):
    u = gaussian_bump(small_grid, ref_params)
    with pytest.raises(ParameterError):
        choquard_term(small_kernel, u, ref_params.replace(mu=2.0))
    coarse = build_grid(8, 8, 8.0, 8.0, ref_params)
    with pytest.raises(GridMismatchError):
        convolve(small_kernel, gaussian_bump(coarse, ref_params))
    with pytest.raises(GridMismatchError):
        kernel_from_entries(small_grid, ref_params, 16, np.ones((4, 4)))


def test_kernel_from_entries_round_trip(ref_params, small_grid, small_kernel):
    copy = kernel_from_entries(small_grid, ref_params, 16, small_kernel.entries.copy())
    np.testing.assert_array_equal(copy.self_entries, small_kernel.self_entries)
    summary = kernel_summary(copy)
    assert summary['nr'] == 16 and summary['min_entry'] > 0.0


def test_near_field_block_is_patched_into_the_matrix(ref_params, small_grid, small_kernel):
    near = small_kernel.near_entries
    assert near.shape == small_grid.shape + (5, 5)
    ns = small_grid.ns
    K = small_kernel.entries
    for (i, j), (di, dj) in (((0, 0), (0, 1)), ((5, 7), (-2, 1)), ((15, 15), (-1, -1)), ((3, 0), (2, 2))):
        a, b = i * ns + j, (i + di) * ns + j + dj
        assert K[a, b] == near[i, j, di + 2, dj + 2]
        assert near[i, j, di + 2, dj + 2] == near[i + di, j + dj, 2 - di, 2 - dj]
    assert np.isnan(near[0, 0, 0, 2]) and np.isnan(near[15, 3, 4, 2])
    finite = near[np.isfinite(near)]
    assert np.all(finite > 0.0)


def test_near_field_is_the_cell_average(ref_params, small_grid):
    # a far neighbour cell is smooth enough for its midpoint value to be within a few percent
    near = near_field_entries(small_grid, ref_params, 16)
    g = small_grid
    rule = (angular_rule(ref_params.m, 16), angular_rule(ref_params.ell, 16))
    point = float(kernel_values(g.r_nodes[8], g.s_nodes[8], g.r_nodes[10], g.s_nodes[10], *rule,
                                ref_params.gamma, ref_params.mu))
    assert near[8, 8, 4, 4] == pytest.approx(point, rel=5e-2)
    assert near[8, 8, 2, 2] > near[8, 8, 3, 3] > near[8, 8, 4, 4]
