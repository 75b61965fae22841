import numpy as np
import pytest

from gchoquard.core.audit import pohozaev_residual, ratio_decomposition
from gchoquard.core.geometry import ProblemParams, pohozaev_coefficients
from gchoquard.core.grid_ops import RadialField, build_grid, gaussian_bump
from gchoquard.core.nonlocal_ops import build_kernel
from gchoquard.core.solver import (
    MountainPassPath,
    RefinementRow,
    SolverConfig,
    cauchy_decreasing,
    initial_field,
    mountain_pass_solve,
    nonexistence_probe,
    refinement_study,
    solve_ground_state,
)
from gchoquard.core.variational import energy, energy_gradient, weighted_norm
from gchoquard.utils.constants import REPORT_KEYS
from gchoquard.utils.errors import (
    GridMismatchError,
    MaxIterationsError,
    NonadmissibleExponentError,
    ParameterError,
    PathEndpointError,
)
from gchoquard.utils.fileio import save_field

from oracles import RadialChoquard3D


def test_ground_state_converges(ref_params, small_ground_state):
    report = small_ground_state
    assert report.converged
    assert report.residual <= 1e-7
    b = report.breakdown
    assert abs(report.nehari_residual) <= 1e-10 * b.D
    assert b.E > 0.0
    assert b.E == pytest.approx((0.5 - 0.5 / ref_params.p) * b.D, rel=1e-10)
    assert report.method == 'nehari'
    assert report.negative_part_norm >= 0.0


def test_ground_state_peaks_on_the_axes(small_ground_state):
    values = small_ground_state.field.values
    assert np.unravel_index(np.argmax(values), values.shape) == (0, 0)
    assert values[0, 0] > 0.0


def test_reported_residual_matches_field(ref_params, small_kernel, small_ground_state):
    g = energy_gradient(small_ground_state.field, small_kernel, ref_params)
    assert weighted_norm(g) == pytest.approx(small_ground_state.residual, rel=1e-8)
    b = energy(small_ground_state.field, small_kernel, ref_params)
    assert b.E == pytest.approx(small_ground_state.breakdown.E, rel=1e-12)


def test_energy_history_is_monotone(ref_params, small_grid, small_kernel):
    config = SolverConfig(tol=1e-5, log_every=1)
    report = solve_ground_state(ref_params, small_grid, small_kernel, config)
    energies = [E for _, E, _ in report.history]
    assert len(energies) >= 2
    for before, after in zip(energies, energies[1:]):
        assert after <= before + 1e-13 * abs(before)
    iters = [it for it, _, _ in report.history]
    assert iters == sorted(set(iters))


def test_report_dict_order(small_ground_state):
    payload = small_ground_state.to_dict()
    assert tuple(payload)[:len(REPORT_KEYS)] == REPORT_KEYS
    assert payload['params']['p'] == 2.0
    assert payload['grid'] == {'nr': 16, 'ns': 16, 'R': 8.0, 'S': 8.0}


def test_budget_exhaustion_carries_report(ref_params, small_grid, small_kernel):
    with pytest.raises(MaxIterationsError) as info:
        solve_ground_state(ref_params, small_grid, small_kernel, SolverConfig(tol=1e-12, max_iters=2))
    report = info.value.report
    assert report is not None and not report.converged
    assert report.iters == 2


def test_nonadmissible_exponent_is_refused(ref_params, small_grid, small_kernel):
    with pytest.raises(NonadmissibleExponentError) as info:
        solve_ground_state(ref_params.replace(p=3.5), small_grid, small_kernel)
    lo, hi = info.value.interval
    assert lo == pytest.approx(1.8) and hi == pytest.approx(3.0)


@pytest.mark.parametrize('p', [1.05, 1.2, 1.4, 1.6, 1.75, 1.8, 3.0, 3.05, 3.5, 4.0, 5.0, 8.0])
def test_solver_refuses_the_nonexistence_regime(ref_params, small_grid, small_kernel, p):
    params = ref_params.replace(p=p)
    c_a, c_b = pohozaev_coefficients(params)
    assert min(c_a, c_b) <= 0.0
    with pytest.raises(NonadmissibleExponentError):
        solve_ground_state(params, small_grid, small_kernel)
    with pytest.raises(NonadmissibleExponentError):
        mountain_pass_solve(params, small_grid, small_kernel)


def test_mismatched_kernel(ref_params, small_grid, small_kernel):
    coarse = build_grid(8, 8, 8.0, 8.0, ref_params)
    with pytest.raises(GridMismatchError):
        solve_ground_state(ref_params, coarse, small_kernel)
    with pytest.raises(ParameterError):
        solve_ground_state(ref_params.replace(mu=1.5), small_grid, small_kernel)


@pytest.mark.parametrize('changes', [
    dict(tol=0.0),
    dict(max_iters=0),
    dict(backtrack=1.0),
    dict(armijo=0.0),
    dict(init_kind='random'),
    dict(init_kind='custom_file'),
    dict(log_every=0),
])
def test_solver_config_validation(changes):
    with pytest.raises(ParameterError):
        SolverConfig(**changes)


def test_solver_config_replace():
    config = SolverConfig().replace(tol=1e-3)
    assert config.tol == 1e-3
    assert config.to_dict()['tol'] == 1e-3


def test_restart_from_stored_field(ref_params, small_grid, small_kernel, small_ground_state, tmp_path):
    path = save_field(tmp_path / 'field.csv', small_ground_state.field, ref_params)
    config = SolverConfig(tol=1e-7, init_kind='custom_file', init_path=str(path))
    u0 = initial_field(ref_params, small_grid, config)
    np.testing.assert_array_equal(u0.values, small_ground_state.field.values)
    report = solve_ground_state(ref_params, small_grid, small_kernel, config)
    assert report.iters <= 1
    assert report.breakdown.E == pytest.approx(small_ground_state.breakdown.E, rel=1e-10)


def test_path_validation(small_grid, ref_params):
    zero = RadialField(small_grid, np.zeros(small_grid.shape))
    bump = gaussian_bump(small_grid, ref_params)
    with pytest.raises(PathEndpointError):
        MountainPassPath((zero, bump), (0.0, 1.0))
    with pytest.raises(ParameterError):
        MountainPassPath((bump, bump), (1.0, -1.0))
    path = MountainPassPath((zero, bump), (0.0, -1.0))
    assert len(path.nodes) == 2


def test_mountain_pass_needs_enough_nodes(ref_params, small_grid, small_kernel):
    with pytest.raises(ParameterError):
        mountain_pass_solve(ref_params, small_grid, small_kernel, n_path=4)


def test_mountain_pass_budget_report(ref_params, small_grid, small_kernel):
    with pytest.raises(MaxIterationsError) as info:
        mountain_pass_solve(ref_params, small_grid, small_kernel,
                            SolverConfig(mp_tol=1e-12, max_iters=3), n_path=8)
    report = info.value.report
    assert report.method == 'mountain_pass'
    path = report.path
    assert len(path.nodes) == 8
    assert path.nodes[0].is_zero()
    assert path.energies[-1] < 0.0
    assert report.mp_level == report.breakdown.E
    assert any(node is report.field for node in path.nodes)
    assert np.all(np.isfinite(report.field.values))


def test_mountain_pass_never_leaves_finite_fields(ref_params, small_grid, small_kernel):
    # an aggressive initial step must be absorbed by the spacing cap and the backtracking
    config = SolverConfig(step0=50.0, mp_tol=1e-12, max_iters=40, mp_reparam_every=3)
    with pytest.raises(MaxIterationsError) as info:
        mountain_pass_solve(ref_params, small_grid, small_kernel, config, n_path=8)
    report = info.value.report
    assert all(np.all(np.isfinite(node.values)) for node in report.path.nodes)
    assert all(np.isfinite(E) for E in report.path.energies)
    assert report.path.energies[-1] < 0.0


@pytest.mark.slow
def test_mountain_pass_level_matches_ground_state(ref_params, small_grid, small_kernel, small_ground_state):
    report = mountain_pass_solve(ref_params, small_grid, small_kernel,
                                 SolverConfig(mp_tol=1e-4, max_iters=5000))
    assert report.converged
    E0 = small_ground_state.breakdown.E
    assert abs(report.mp_level - E0) <= 1e-3 * abs(E0)


@pytest.mark.parametrize('p', [1.6, 3.5])
def test_nonexistence_probe(ref_params, small_grid, small_kernel, p):
    record = nonexistence_probe(ref_params.replace(p=p), small_grid, small_kernel,
                                SolverConfig(probe_iters=30))
    assert record.sign_condition
    assert min(record.c_A, record.c_B) < 0.0
    assert record.regime == 'nonexistent regime'
    assert record.classification in ('collapse', 'escape', 'stagnate', 'converged')
    assert set(record.to_dict()) >= {'c_A', 'c_B', 'classification', 'norm_trace'}


def test_refinement_study(ref_params):
    rows = refinement_study(ref_params, (8, 12), 8.0, 8.0, n_theta=8, config=SolverConfig(tol=1e-6))
    assert [row.n for row in rows] == [8, 12]
    assert all(row.converged for row in rows)
    assert all(row.E > 0.0 for row in rows)


def test_cauchy_decreasing():
    def row(n, E):
        return RefinementRow(n, E, 0.0, 0.0, 0.0, 0.0, True)

    assert cauchy_decreasing([row(8, 1.0), row(16, 1.5), row(32, 1.6), row(64, 1.61)])
    assert not cauchy_decreasing([row(8, 1.0), row(16, 1.1), row(32, 1.5)])


# === ACCEPTANCE RUNS ===

@pytest.mark.slow
def test_identities_at_48(ref_params, reference_run):
    kernel, report = reference_run
    _, p_rel = pohozaev_residual(report.field, kernel, ref_params, report.breakdown)
    assert p_rel <= 5e-2
    ratios = ratio_decomposition(report.field, kernel, ref_params, report.breakdown)
    assert ratios.err_A <= 0.05
    assert ratios.err_B <= 0.05


@pytest.mark.slow
def test_pohozaev_improves_under_refinement(ref_params, reference_run):
    kernel48, report48 = reference_run
    _, rel48 = pohozaev_residual(report48.field, kernel48, ref_params, report48.breakdown)
    grid = build_grid(96, 96, 12.0, 12.0, ref_params)
    kernel = build_kernel(grid, ref_params, n_theta=32)
    report = solve_ground_state(ref_params, grid, kernel)
    _, rel96 = pohozaev_residual(report.field, kernel, ref_params, report.breakdown)
    assert rel96 < rel48


@pytest.mark.slow
def test_euclidean_reduction_matches_radial_oracle():
    params = ProblemParams(m=1, ell=2, gamma=0.0, mu=1.0, p=2.0)
    grid = build_grid(48, 48, 12.0, 12.0, params)
    kernel = build_kernel(grid, params, n_theta=32)
    report = solve_ground_state(params, grid, kernel)
    oracle = RadialChoquard3D()
    E_ref = oracle.energy(oracle.solve())
    assert report.breakdown.E == pytest.approx(E_ref, rel=1e-2)


@pytest.mark.slow
def test_mountain_pass_level_at_48(ref_params, reference_run):
    kernel, report = reference_run
    mp = mountain_pass_solve(ref_params, kernel.grid, kernel)
    assert mp.converged
    E0 = report.breakdown.E
    assert abs(mp.mp_level - E0) <= 2e-2 * E0


@pytest.fixture(scope='module')
def ladder(ref_params):
    return refinement_study(ref_params, (24, 48, 96), 12.0, 12.0, n_theta=32)


@pytest.mark.slow
def test_refinement_ladder_is_cauchy(ladder):
    assert [row.n for row in ladder] == [24, 48, 96]
    assert all(row.converged for row in ladder)
    assert cauchy_decreasing(ladder)


@pytest.mark.slow
def test_ratios_approach_pohozaev_coefficients(ladder):
    # A/D -> c_A = 0.25 and B/D -> c_B = 0.75
    errs_A = [row.ratio_A_err for row in ladder]
    errs_B = [row.ratio_B_err for row in ladder]
    assert errs_A[-1] < errs_A[1] <= 0.05
    assert errs_B[-1] < errs_B[1] <= 0.05
