"""
Ground states by Nehari-projected descent, cross-checked by a mountain-pass path

The primary method descends the Nehari-restricted energy J(u) = E(t*(u) u) along
the H^1_gamma (Sobolev) gradient with Armijo backtracking. The path method keeps
a polygon of fields from 0 to a negative-energy endpoint, lowers its highest node and
then lets that node climb onto the saddle.
"""
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .audit import pohozaev_residual, ratio_decomposition
from .geometry import ProblemParams, admissible_p_interval, classify_regime, is_admissible
from .grid_ops import RadialField, RadialGrid, build_grid, gaussian_bump, stiffness_matrix
from .nonlocal_ops import KernelMatrix, build_kernel
from .performance import perf_monitor
from .variational import (
    EnergyBreakdown,
    EnergyState,
    evaluate,
    nehari_factor,
    norm_gamma,
    ray_threshold,
    sobolev_gradient,
    weighted_norm,
)
from ..utils.constants import (
    DIVERGENCE_WINDOW,
    MP_DEFORM_TOL,
    MP_ENDPOINT_MARGIN,
    MP_LEVEL_STALL,
    MP_MIN_NODES,
    PROBE_COLLAPSE_RATIO,
    PROBE_ESCAPE_RATIO,
    SOLVER_DEFAULTS,
)
from ..utils.errors import (
    DegenerateFieldError,
    GridMismatchError,
    MaxIterationsError,
    NonadmissibleExponentError,
    ParameterError,
    PathEndpointError,
    SolverDivergedError,
)

logger = logging.getLogger(__name__)

INIT_KINDS = ('gaussian_bump', 'custom_file')

# energy comparisons near convergence are made up to this relative rounding
_ROUNDING = 16.0 * np.finfo(float).eps


@dataclass(frozen=True)
class SolverConfig:
    tol: float = SOLVER_DEFAULTS['tol']
    max_iters: int = SOLVER_DEFAULTS['max_iters']
    step0: float = SOLVER_DEFAULTS['step0']
    backtrack: float = SOLVER_DEFAULTS['backtrack']
    armijo: float = SOLVER_DEFAULTS['armijo']
    max_backtracks: int = SOLVER_DEFAULTS['max_backtracks']
    init_kind: str = SOLVER_DEFAULTS['init_kind']
    init_path: Optional[str] = SOLVER_DEFAULTS['init_path']
    seed: int = SOLVER_DEFAULTS['seed']
    log_every: int = SOLVER_DEFAULTS['log_every']
    mp_tol: float = SOLVER_DEFAULTS['mp_tol']
    mp_reparam_every: int = SOLVER_DEFAULTS['mp_reparam_every']
    allow_nonadmissible: bool = SOLVER_DEFAULTS['allow_nonadmissible']
    probe_iters: int = SOLVER_DEFAULTS['probe_iters']

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if not self.mp_tol > 0.0:
            raise ParameterError(f"mp_tol must be positive, got {self.mp_tol}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ParameterError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.step0 > 0.0:
            raise ParameterError(f"step0 must be positive, got {self.step0}")
        if not 0.0 < self.backtrack < 1.0:
            raise ParameterError(f"backtrack must lie in (0, 1), got {self.backtrack}")
        if not 0.0 < self.armijo < 1.0:
            raise ParameterError(f"armijo must lie in (0, 1), got {self.armijo}")
        for name in ('max_backtracks', 'log_every', 'mp_reparam_every', 'probe_iters'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value}")
        if self.init_kind not in INIT_KINDS:
            raise ParameterError(f"init_kind must be one of {INIT_KINDS}, got {self.init_kind!r}")
        if self.init_kind == 'custom_file' and not self.init_path:
            raise ParameterError("init_kind = 'custom_file' needs init_path")

    def replace(self, **changes) -> 'SolverConfig':
        values = asdict(self)
        values.update(changes)
        return SolverConfig(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MountainPassPath:
    nodes: Tuple[RadialField, ...]
    energies: Tuple[float, ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.energies):
            raise ParameterError("path needs one energy per node")
        if not self.nodes[0].is_zero():
            raise ParameterError("path must start at the zero field")
        if not self.energies[-1] < 0.0:
            raise PathEndpointError(f"path endpoint not negative: E = {self.energies[-1]:.6g}")


@dataclass
class SolveReport:
    field: RadialField
    breakdown: EnergyBreakdown
    residual: float
    nehari_residual: float
    pohozaev_residual: float
    iters: int
    converged: bool
    mp_level: float
    params: ProblemParams
    config: SolverConfig
    dual_residual: float = 0.0
    negative_part_norm: float = 0.0
    history: List[Tuple[int, float, float]] = field(default_factory=list)
    method: str = 'nehari'
    wall_time_seconds: float = 0.0
    path: Optional[MountainPassPath] = None

    def to_dict(self) -> Dict[str, Any]:
        b = self.breakdown
        return {
            'params': self.params.to_dict(),
            'grid': self.field.grid.describe(),
            'config': self.config.to_dict(),
            'A': b.A,
            'B': b.B,
            'D': b.D,
            'E': b.E,
            'residual': self.residual,
            'nehari_residual': self.nehari_residual,
            'pohozaev_residual': self.pohozaev_residual,
            'iters': self.iters,
            'converged': self.converged,
            'wall_time_seconds': self.wall_time_seconds,
            'method': self.method,
            'mp_level': self.mp_level,
            'dual_residual': self.dual_residual,
            'negative_part_norm': self.negative_part_norm,
            'history': [list(h) for h in self.history],
        }


@dataclass(frozen=True)
class ProbeRecord:
    """Outcome of running the descent where no ground state should exist"""

    c_A: float
    c_B: float
    sign_condition: bool
    classification: str
    iters: int
    norm_ratio: float
    residual: float
    energy: float
    regime: str
    norm_trace: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['norm_trace'] = list(self.norm_trace)
        return out


@dataclass(frozen=True)
class RefinementRow:
    n: int
    E: float
    pohozaev_rel: float
    ratio_A_err: float
    ratio_B_err: float
    residual: float
    converged: bool


# === SHARED PIECES ===

def _check_inputs(params: ProblemParams, grid: RadialGrid, kernel: KernelMatrix,
                  config: SolverConfig) -> None:
    if not kernel.grid.same_as(grid):
        raise GridMismatchError("kernel was assembled on a different grid")
    if not kernel.matches(params):
        raise ParameterError("kernel parameters (m, ell, gamma, mu) differ from the problem")
    if not is_admissible(params) and not config.allow_nonadmissible:
        raise NonadmissibleExponentError(params.p, admissible_p_interval(params))


def initial_field(params: ProblemParams, grid: RadialGrid, config: SolverConfig) -> RadialField:
    """u0 = exp(-(r^2 + s^2/(1+gamma)^2)) or a stored field"""
    if config.init_kind == 'custom_file':
        from ..utils.fileio import load_field
        u0, _ = load_field(config.init_path, params=params, grid=grid)
        return u0
    return gaussian_bump(grid, params)


def _rescaled_state(trial: RadialField, state: EnergyState, t: float, kernel: KernelMatrix,
                    params: ProblemParams) -> EnergyState:
    # K(t u) = t^p K(u): no second convolution after a Nehari rescale
    u = trial.scaled(t)
    return evaluate(u, kernel, params, potential=state.potential.scaled(t ** params.p))


def _negative_part(u: RadialField) -> float:
    return float(np.sqrt(np.sum(u.grid.w * np.minimum(u.values, 0.0) ** 2)))


@dataclass
class _DescentOutcome:
    field: RadialField
    state: EnergyState
    iters: int
    converged: bool
    residual: float
    dual_residual: float
    history: List[Tuple[int, float, float]]
    norm_trace: List[float]
    failure: Optional[str] = None


class NehariDescent:
    """Armijo descent of u -> E(t*(u) u) along the Sobolev gradient"""

    def __init__(self, params: ProblemParams, kernel: KernelMatrix, config: SolverConfig):
        self.params = params
        self.kernel = kernel
        self.config = config
        self.coef = 0.5 - 0.5 / params.p

    def project(self, u: RadialField) -> Tuple[RadialField, EnergyState]:
        state = evaluate(u, self.kernel, self.params)
        b = state.breakdown
        t = nehari_factor(b.norm_sq, b.D, self.params.p)
        return u.scaled(t), _rescaled_state(u, state, t, self.kernel, self.params)

    def run(self, u0: RadialField, max_iters: int) -> _DescentOutcome:
        cfg, p = self.config, self.params.p
        u, state = self.project(u0)
        scale0 = np.sqrt(state.breakdown.norm_sq)
        lo, hi = DIVERGENCE_WINDOW
        g = state.gradient
        residual = weighted_norm(g)
        history = [(0, state.breakdown.E, residual)]
        norm_trace = [1.0]
        J = state.breakdown.E
        dual = 0.0
        it = 0
        failure = None
        converged = residual <= cfg.tol

        while not converged and it < max_iters:
            it += 1
            h = sobolev_gradient(g, self.params)
            slope = float(np.sum(u.grid.w * g.values * h.values))
            dual = float(np.sqrt(max(slope, 0.0)))
            eta = cfg.step0
            accepted = None
            for _ in range(cfg.max_backtracks):
                trial = u.with_values(u.values - eta * h.values)
                try:
                    t_state = evaluate(trial, self.kernel, self.params)
                    b = t_state.breakdown
                    t_star = nehari_factor(b.norm_sq, b.D, p)
                except DegenerateFieldError:
                    eta *= cfg.backtrack
                    continue
                J_trial = self.coef * t_star * t_star * b.norm_sq
                if J_trial <= J - cfg.armijo * eta * slope + _ROUNDING * abs(J):
                    accepted = _rescaled_state(trial, t_state, t_star, self.kernel, self.params)
                    u = trial.scaled(t_star)
                    break
                eta *= cfg.backtrack
            if accepted is None:
                failure = 'stalled'
                break

            state = accepted
            g = state.gradient
            J = state.breakdown.E
            residual = weighted_norm(g)
            ratio = float(np.sqrt(state.breakdown.norm_sq)) / scale0
            norm_trace.append(ratio)
            if it % cfg.log_every == 0:
                history.append((it, J, residual))
                logger.debug("iter %d: E=%.12g residual=%.3e step=%.3g", it, J, residual, eta)
            if not lo <= ratio <= hi:
                direction = 'collapse' if ratio < lo else 'escape'
                raise SolverDivergedError(
                    f"diverged: |u|_gamma ratio {ratio:.3e} left [{lo:g}, {hi:g}] ({direction})",
                    direction=direction,
                )
            converged = residual <= cfg.tol

        if not history or history[-1][0] != it:
            history.append((it, J, residual))
        return _DescentOutcome(u, state, it, converged, residual, dual, history, norm_trace, failure)


def _build_report(params, config, outcome_field, state, residual, iters, converged, *,
                  dual=0.0, history=None, method='nehari', started=0.0, path=None,
                  kernel=None) -> SolveReport:
    b = state.breakdown
    poho, _ = pohozaev_residual(outcome_field, kernel, params, b)
    return SolveReport(
        field=outcome_field,
        breakdown=b,
        residual=residual,
        nehari_residual=b.norm_sq - b.D,
        pohozaev_residual=poho,
        iters=iters,
        converged=converged,
        mp_level=b.E,
        params=params,
        config=config,
        dual_residual=dual,
        negative_part_norm=_negative_part(outcome_field),
        history=list(history or []),
        method=method,
        wall_time_seconds=time.perf_counter() - started,
        path=path,
    )


# === GROUND STATE ===

@perf_monitor.time_it
def solve_ground_state(params: ProblemParams, grid: RadialGrid, kernel: KernelMatrix,
                       config: SolverConfig = SolverConfig()) -> SolveReport:
    _check_inputs(params, grid, kernel, config)
    started = time.perf_counter()
    descent = NehariDescent(params, kernel, config)
    outcome = descent.run(initial_field(params, grid, config), config.max_iters)
    report = _build_report(params, config, outcome.field, outcome.state, outcome.residual,
                           outcome.iters, outcome.converged, dual=outcome.dual_residual,
                           history=outcome.history, started=started, kernel=kernel)
    if not outcome.converged:
        reason = 'line search stalled' if outcome.failure == 'stalled' else 'max iterations'
        logger.info("ground state not converged (%s) after %d iterations, residual %.3e",
                    reason, outcome.iters, outcome.residual)
        raise MaxIterationsError(
            f"{reason}: residual {outcome.residual:.3e} > tol {config.tol:g} after {outcome.iters} iterations",
            report=report,
        )
    logger.info("ground state converged in %d iterations (E=%.10g, residual=%.2e, %.2fs)",
                outcome.iters, report.breakdown.E, outcome.residual, report.wall_time_seconds)
    return report


# === MOUNTAIN PASS ===

def _h_inner(a: np.ndarray, b: np.ndarray, grid: RadialGrid, gamma: float) -> float:
    """<a, b>_H = a^T L b + <a, b>_w"""
    L = stiffness_matrix(grid, gamma)
    return float(a.ravel() @ (L @ b.ravel()) + np.sum(grid.w * a * b))


def _tangent(nodes: List[RadialField], k: int, params: ProblemParams) -> np.ndarray:
    grid = nodes[k].grid
    tau = nodes[k + 1].values - nodes[k - 1].values
    size = np.sqrt(_h_inner(tau, tau, grid, params.gamma))
    return tau / size if size > 0.0 else tau


def _equidistribute(nodes: List[RadialField], params: ProblemParams) -> List[RadialField]:
    """Equal H^1_gamma arc length between nodes; both ends stay put"""
    n = len(nodes)
    if n <= 2:
        return list(nodes)
    seg = np.array([norm_gamma(nodes[k + 1].with_values(nodes[k + 1].values - nodes[k].values), params)
                    for k in range(n - 1)])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0.0:
        return list(nodes)
    out = [nodes[0]]
    for tau in np.linspace(0.0, cum[-1], n)[1:-1]:
        k = int(np.clip(np.searchsorted(cum, tau, side='right') - 1, 0, n - 2))
        lam = (tau - cum[k]) / seg[k] if seg[k] > 0.0 else 0.0
        out.append(nodes[k].with_values((1.0 - lam) * nodes[k].values + lam * nodes[k + 1].values))
    out.append(nodes[-1])
    return out


def _reparametrize(nodes: List[RadialField], params: ProblemParams, pin: int) -> List[RadialField]:
    """Re-space both sides of the pinned (highest) node separately"""
    left = _equidistribute(nodes[:pin + 1], params)
    right = _equidistribute(nodes[pin:], params)
    return left + right[1:]


def _highest(states: List[EnergyState]) -> int:
    """Interior node of largest energy, lowest index on ties"""
    return int(np.argmax([s.breakdown.E for s in states[1:-1]])) + 1


def _try_step(u: RadialField, step: float, d: np.ndarray, kernel: KernelMatrix,
              params: ProblemParams) -> Optional[Tuple[RadialField, EnergyState]]:
    """u - step d with its energy state, or None when the trial is not finite"""
    with np.errstate(over='ignore', invalid='ignore'):
        values = u.values - step * d
        if not np.all(np.isfinite(values)):
            return None
        trial = u.with_values(values)
        try:
            state = evaluate(trial, kernel, params)
        except ParameterError:
            # potential or gradient overflowed
            return None
    if not np.isfinite(state.breakdown.E):
        return None
    return trial, state


def _dual(state: EnergyState, params: ProblemParams) -> Tuple[RadialField, float]:
    h = sobolev_gradient(state.gradient, params)
    pairing = float(np.sum(h.grid.w * state.gradient.values * h.values))
    return h, float(np.sqrt(max(pairing, 0.0)))


def _deform_path(nodes: List[RadialField], states: List[EnergyState], kernel: KernelMatrix,
                 params: ProblemParams, config: SolverConfig, budget: int,
                 history: List[Tuple[int, float, float]]) -> int:
    """
    Lower the path maximum in place and return the iterations spent.

    Only the highest node moves, along the part of its Sobolev gradient normal to
    the path and never further than the distance to its nearer neighbour.
    """
    w = nodes[0].grid.w
    level_before = np.inf
    it = 0
    while it < budget:
        k = _highest(states)
        g = states[k].gradient
        h = sobolev_gradient(g, params)
        tau = _tangent(nodes, k, params)
        d = h.values - float(np.sum(w * g.values * tau)) * tau
        slope = float(np.sum(w * g.values * d))
        normal = float(np.sqrt(max(slope, 0.0)))
        if normal <= MP_DEFORM_TOL * np.sqrt(states[k].breakdown.norm_sq):
            break
        spacing = min(norm_gamma(nodes[k].with_values(nodes[k].values - nodes[j].values), params)
                      for j in (k - 1, k + 1))
        if not spacing > 0.0:
            break
        it += 1
        E0 = states[k].breakdown.E
        eta = min(config.step0, spacing / normal)
        moved = False
        for _ in range(config.max_backtracks):
            result = _try_step(nodes[k], eta, d, kernel, params)
            if result is not None and result[1].breakdown.E <= E0 - config.armijo * eta * slope:
                nodes[k], states[k] = result
                moved = True
                break
            eta *= config.backtrack
        if it % config.log_every == 0:
            history.append((it, E0, normal))
            logger.debug("path deformation iter %d: level=%.12g normal residual=%.3e node=%d",
                         it, E0, normal, k)
        if not moved:
            break
        if it % config.mp_reparam_every == 0:
            nodes[:] = _reparametrize(nodes, params, pin=_highest(states))
            states[1:-1] = [evaluate(u, kernel, params) for u in nodes[1:-1]]
            level = states[_highest(states)].breakdown.E
            if level_before - level <= MP_LEVEL_STALL * abs(level):
                break
            level_before = level
    return it


def _climb(u: RadialField, state: EnergyState, kernel: KernelMatrix, params: ProblemParams,
           config: SolverConfig, start: int, history: List[Tuple[int, float, float]]):
    """
    Drive a node onto the saddle: ascend along the ray through it, descend across it.

    With a homogeneous nonlinearity the ray through a critical point u* is a Hessian
    eigenvector of curvature -(2p - 2) in H^1_gamma, so reflecting the Sobolev
    gradient in that ray makes the step a local contraction for
    step <= 1 / max(1, 2p - 2). Steps are kept only when the dual residual drops.
    """
    w = u.grid.w
    step_max = min(config.step0, 1.0 / max(1.0, 2.0 * params.p - 2.0))
    step = step_max
    h, dual = _dual(state, params)
    residual = weighted_norm(state.gradient)
    it = start
    failure = None
    while residual > config.mp_tol and it < config.max_iters:
        it += 1
        along = float(np.sum(w * state.gradient.values * u.values)) / state.breakdown.norm_sq
        d = h.values - 2.0 * along * u.values
        accepted = None
        for _ in range(config.max_backtracks):
            result = _try_step(u, step, d, kernel, params)
            if result is not None:
                h1, dual1 = _dual(result[1], params)
                if dual1 < dual:
                    accepted = (result[0], result[1], h1, dual1)
                    break
            step *= config.backtrack
        if accepted is None:
            failure = 'stalled'
            break
        u, state, h, dual = accepted
        step = min(step_max, 1.1 * step)
        residual = weighted_norm(state.gradient)
        if it % config.log_every == 0:
            history.append((it, state.breakdown.E, residual))
            logger.debug("saddle climb iter %d: E=%.12g residual=%.3e step=%.3g",
                         it, state.breakdown.E, residual, step)
    return u, state, it, residual, dual, failure


@perf_monitor.time_it
def mountain_pass_solve(params: ProblemParams, grid: RadialGrid, kernel: KernelMatrix,
                        config: SolverConfig = SolverConfig(), n_path: int = 16) -> SolveReport:
    """
    Discrete min-max over polygonal paths from 0 to a negative-energy endpoint.

    The path starts on the ray through the initial bump. Up to half of `max_iters`
    deform it: the highest interior node (lowest index on ties) descends, and every
    `mp_reparam_every` steps the nodes on either side of it are re-spaced evenly in
    H^1_gamma arc length. The highest node then climbs onto the saddle and replaces
    itself in the reported path; mp_level is its energy.
    """
    if int(n_path) != n_path or n_path < MP_MIN_NODES:
        raise ParameterError(f"n_path must be an integer >= {MP_MIN_NODES}, got {n_path}")
    _check_inputs(params, grid, kernel, config)
    started = time.perf_counter()

    phi = initial_field(params, grid, config)
    t_end = MP_ENDPOINT_MARGIN * ray_threshold(phi, kernel, params)
    endpoint = phi.scaled(t_end)
    end_state = evaluate(endpoint, kernel, params)
    if not end_state.breakdown.E < 0.0:
        raise PathEndpointError(
            f"path endpoint not negative: E({t_end:.4g} phi) = {end_state.breakdown.E:.6g}"
        )
    n_path = int(n_path)
    nodes = [phi.scaled(k / (n_path - 1) * t_end) for k in range(n_path)]
    states: List[EnergyState] = [evaluate(u, kernel, params) for u in nodes]

    history: List[Tuple[int, float, float]] = []
    deform_iters = _deform_path(nodes, states, kernel, params, config,
                                config.max_iters // 2, history)
    k_max = _highest(states)
    logger.debug("path deformed in %d iterations, highest node %d at E=%.10g",
                 deform_iters, k_max, states[k_max].breakdown.E)
    u, state, it, residual, dual, failure = _climb(nodes[k_max], states[k_max], kernel,
                                                    params, config, deform_iters, history)
    nodes[k_max], states[k_max] = u, state
    converged = residual <= config.mp_tol
    if not history or history[-1][0] != it:
        history.append((it, state.breakdown.E, residual))

    path = MountainPassPath(tuple(nodes), tuple(s.breakdown.E for s in states))
    report = _build_report(params, config, u, state, residual, it, converged, dual=dual,
                           history=history, method='mountain_pass', started=started,
                           path=path, kernel=kernel)
    if not converged:
        reason = 'climbing step stalled' if failure == 'stalled' else 'max iterations'
        raise MaxIterationsError(
            f"{reason}: mountain-pass residual {residual:.3e} > mp_tol {config.mp_tol:g}",
            report=report,
        )
    logger.info("mountain pass converged in %d iterations (level=%.10g)", it, report.mp_level)
    return report


# === NONEXISTENCE PROBE ===

def nonexistence_probe(params: ProblemParams, grid: RadialGrid, kernel: KernelMatrix,
                       config: SolverConfig = SolverConfig()) -> ProbeRecord:
    """Run the projected descent with the admissibility override and classify what happens"""
    regime = classify_regime(params)
    if regime.admissible:
        logger.warning("nonexistence probe called with admissible p=%g", params.p)
    cfg = config.replace(allow_nonadmissible=True)
    _check_inputs(params, grid, kernel, cfg)
    descent = NehariDescent(params, kernel, cfg)
    classification, iters, ratio, residual, E, trace = 'stagnate', 0, 1.0, float('nan'), float('nan'), ()
    try:
        outcome = descent.run(initial_field(params, grid, cfg), cfg.probe_iters)
    except SolverDivergedError as e:
        classification = e.direction
    except DegenerateFieldError:
        classification = 'collapse'
    else:
        iters, residual = outcome.iters, outcome.residual
        E = outcome.state.breakdown.E
        trace = tuple(outcome.norm_trace)
        ratio = trace[-1]
        if ratio < PROBE_COLLAPSE_RATIO:
            classification = 'collapse'
        elif ratio > PROBE_ESCAPE_RATIO:
            classification = 'escape'
        elif outcome.converged:
            classification = 'converged'
    c_a, c_b = regime.c_A, regime.c_B
    logger.info("nonexistence probe p=%g: %s (c_A=%.4g, c_B=%.4g)", params.p, classification, c_a, c_b)
    return ProbeRecord(c_a, c_b, min(c_a, c_b) <= 0.0, classification, iters, ratio,
                       residual, E, regime.label, trace)


# === REFINEMENT ===

def refinement_study(params: ProblemParams, ladder: Sequence[int], R: float, S: float,
                     n_theta: int, config: SolverConfig = SolverConfig()) -> List[RefinementRow]:
    """Ground state on n x n grids for n in `ladder`"""
    rows = []
    for n in ladder:
        grid = build_grid(n, n, R, S, params)
        kernel = build_kernel(grid, params, n_theta)
        report = solve_ground_state(params, grid, kernel, config)
        _, p_rel = pohozaev_residual(report.field, kernel, params, report.breakdown)
        ratios = ratio_decomposition(report.field, kernel, params, report.breakdown)
        rows.append(RefinementRow(n, report.breakdown.E, p_rel, ratios.err_A, ratios.err_B,
                                  report.residual, report.converged))
    return rows


def cauchy_decreasing(rows: Sequence[RefinementRow]) -> bool:
    """|E_{k+1} - E_k| strictly decreasing along the ladder"""
    gaps = [abs(b.E - a.E) for a, b in zip(rows, rows[1:])]
    return all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
