"""
Engine facade: config -> grid -> kernel -> solver -> audit -> files
"""
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .config import RunConfig, check_output_dir
from ..core.audit import AuditReport, audit
from ..core.gpu_accelerator import global_gpu_accelerator
from ..core.geometry import (
    ProblemParams,
    admissible_p_interval,
    classify_regime,
    is_admissible,
)
from ..core.grid_ops import RadialField, RadialGrid, build_grid, gaussian_bump
from ..core.nonlocal_ops import KernelMatrix, build_kernel, choquard_potential, kernel_backend
from ..core.performance import perf_monitor
from ..core.solver import (
    ProbeRecord,
    SolveReport,
    mountain_pass_solve,
    nonexistence_probe,
    solve_ground_state,
)
from ..core.variational import mountain_pass_lower_bound, ray_profile, ray_threshold
from ..utils.cache import KernelCache, global_kernel_cache, kernel_key
from ..utils.constants import SWEEP_COLUMNS, SWEEP_PARAMS, THREADS_ENV
from ..utils.errors import (
    ConfigError,
    MaxIterationsError,
    NonadmissibleExponentError,
    SolverDivergedError,
)
from ..utils.fileio import (
    load_field,
    load_kernel,
    save_field,
    save_kernel,
    write_csv,
    write_json,
    write_ray_profile,
)
from ..utils.plotting import plot_radial_slices, plot_ray_profile

logger = logging.getLogger(__name__)

AUDIT_COLUMNS = ('value', 'pohozaev_rel', 'nehari_rel', 'ratio_A_err', 'ratio_B_err',
                 'hls_ratio_spread', 'k_sup', 'k_oracle_err', 'sup_norm', 'tail_mass_fraction')


def thread_budget() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _configure_numba_threads(n: int) -> None:
    try:
        import numba
    except ImportError:
        return
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


@dataclass
class SolveOutcome:
    report: SolveReport
    audit: AuditReport
    directory: Optional[Path]
    mountain_pass: Optional[SolveReport] = None


@dataclass
class SweepRow:
    value: float
    regime: str
    report: Optional[SolveReport] = None
    audit: Optional[AuditReport] = None
    probe: Optional[ProbeRecord] = None
    error: Optional[str] = None

    def summary(self) -> Dict[str, Any]:
        row = {'value': self.value, 'regime': self.regime, 'converged': False}
        nan = float('nan')
        row.update({k: nan for k in ('E', 'A', 'B', 'D', 'pohozaev_rel')})
        if self.report is not None:
            b = self.report.breakdown
            row.update({'E': b.E, 'A': b.A, 'B': b.B, 'D': b.D,
                        'converged': self.report.converged})
            if self.audit is not None:
                row['pohozaev_rel'] = self.audit.pohozaev_rel
        elif self.probe is not None:
            row['E'] = self.probe.energy
        return row


class GrushinChoquardEngine:
    """
    Entry point shared by the CLI and library users.

    Kernels go through a bounded in-process cache (and the on-disk GKRN1 cache when
    `kernel.cache_path` is set), so sweeps over p assemble one kernel.
    """

    def __init__(self, kernel_cache: Optional[KernelCache] = None):
        self.kernel_cache = kernel_cache if kernel_cache is not None else global_kernel_cache
        self.monitor = perf_monitor
        self._lock = threading.RLock()
        self.threads = thread_budget()
        _configure_numba_threads(self.threads)

    # === BUILDING BLOCKS ===
    def grid_for(self, config: RunConfig, params: Optional[ProblemParams] = None) -> RadialGrid:
        g = config.grid
        return build_grid(int(g.nr), int(g.ns), float(g.R), float(g.S), params or config.problem)

    def kernel_for(self, config: RunConfig, grid: RadialGrid,
                   params: Optional[ProblemParams] = None) -> KernelMatrix:
        params = params or config.problem
        spec = config.kernel
        key = kernel_key(grid, params, spec.n_theta, spec.matrix_free)

        def build() -> KernelMatrix:
            cache_path = Path(spec.cache_path) if spec.cache_path else None
            if cache_path is not None and cache_path.exists() and not spec.matrix_free:
                return load_kernel(cache_path, grid, params, spec.n_theta)
            with self.monitor.stage('kernel_build'):
                kernel = build_kernel(grid, params, spec.n_theta, matrix_free=spec.matrix_free,
                                      memory_cap_mb=spec.memory_cap_mb, row_block=spec.row_block)
            logger.info("kernel backend: %s", kernel_backend())
            if cache_path is not None and not spec.matrix_free:
                save_kernel(cache_path, kernel)
            return kernel

        # equal grids from the cache are different objects; callers switch to kernel.grid
        return self.kernel_cache.get_or_build(key, build, monitor=self.monitor)

    def _check_admissible(self, config: RunConfig, params: ProblemParams) -> None:
        if not is_admissible(params) and not config.solver.allow_nonadmissible:
            raise NonadmissibleExponentError(params.p, admissible_p_interval(params))

    # === SOLVE ===
    @perf_monitor.time_it
    def solve(self, config: RunConfig, out_dir: Optional[Path] = None,
              params: Optional[ProblemParams] = None, cross_check: bool = False) -> SolveOutcome:
        """
        Ground state plus full audit. With `out_dir`, writes report.json, audit.json
        and (per [outputs]) field.csv and profile.svg.

        MaxIterationsError propagates after the unconverged report is written.
        """
        params = params or config.problem
        self._check_admissible(config, params)
        if out_dir is not None:
            check_output_dir(out_dir)
        grid = self.grid_for(config, params)
        kernel = self.kernel_for(config, grid, params)
        grid = kernel.grid

        try:
            report = solve_ground_state(params, grid, kernel, config.solver)
        except MaxIterationsError as e:
            if out_dir is not None and e.report is not None:
                self._emit(config, out_dir, e.report, kernel, params)
            raise
        report_audit = self._emit(config, out_dir, report, kernel, params)

        mp = None
        if cross_check:
            mp = mountain_pass_solve(params, grid, kernel, config.solver)
            gap = abs(mp.mp_level - report.breakdown.E) / abs(report.breakdown.E)
            logger.info("mountain-pass level %.10g vs ground state %.10g (gap %.2e)",
                        mp.mp_level, report.breakdown.E, gap)
            if out_dir is not None:
                payload = mp.to_dict()
                payload['relative_gap'] = gap
                write_json(Path(out_dir) / 'mountain_pass.json', payload)
        return SolveOutcome(report, report_audit, Path(out_dir) if out_dir else None, mp)

    def _emit(self, config: RunConfig, out_dir: Optional[Path], report: SolveReport,
              kernel: KernelMatrix, params: ProblemParams) -> AuditReport:
        report_audit = audit(report.field, kernel, params, seed=config.solver.seed)
        if out_dir is None:
            return report_audit
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with self._lock:
            payload = report.to_dict()
            payload['config'] = config.to_dict()
            write_json(out / 'report.json', payload)
            write_json(out / 'audit.json', report_audit.to_dict())
            if config.outputs.emit_field:
                save_field(out / 'field.csv', report.field, params)
            if config.outputs.emit_svg:
                K = choquard_potential(kernel, report.field, params)
                plot_radial_slices(out / 'profile.svg', report.field, K)
        return report_audit

    # === SWEEP ===
    def sweep(self, config: RunConfig, param: str, start: float, stop: float, steps: int,
              out_dir: Optional[Path] = None) -> List[SweepRow]:
        if param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {param!r}")
        if int(steps) != steps or steps < 2:
            raise ConfigError(f"sweep needs steps >= 2, got {steps}")
        values = np.linspace(float(start), float(stop), int(steps))
        # validate every value before any compute
        all_params = [config.problem.replace(**{param: float(v)}) for v in values]
        if out_dir is not None:
            check_output_dir(out_dir)

        def run(index: int) -> SweepRow:
            params = all_params[index]
            value = float(values[index])
            sub = Path(out_dir) / f"{param}_{index:03d}" if out_dir is not None else None
            return self._sweep_point(config, params, value, sub)

        workers = max(1, min(self.threads, len(values)))
        logger.info("sweeping %s over %d values with %d workers", param, len(values), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, range(len(values))))

        if out_dir is not None:
            out = Path(out_dir)
            write_csv(out / 'sweep_summary.csv', SWEEP_COLUMNS, [r.summary() for r in rows])
            write_csv(out / 'audit_table.csv', AUDIT_COLUMNS,
                      [dict(r.audit.to_dict(), value=r.value) for r in rows if r.audit is not None])
        return rows

    def _sweep_point(self, config: RunConfig, params: ProblemParams, value: float,
                     sub: Optional[Path]) -> SweepRow:
        regime = classify_regime(params)
        if sub is not None:
            sub.mkdir(parents=True, exist_ok=True)
        if not regime.admissible:
            grid = self.grid_for(config, params)
            kernel = self.kernel_for(config, grid, params)
            probe = nonexistence_probe(params, kernel.grid, kernel, config.solver)
            if sub is not None:
                write_json(sub / 'probe.json', dict(probe.to_dict(), params=params.to_dict()))
            return SweepRow(value, regime.label, probe=probe)
        try:
            outcome = self.solve(config, sub, params=params)
        except MaxIterationsError as e:
            logger.warning("%s: %s", params.to_dict(), e.message)
            return SweepRow(value, regime.label, report=e.report, error=e.message)
        except SolverDivergedError as e:
            logger.warning("%s: %s", params.to_dict(), e.message)
            return SweepRow(value, regime.label, error=e.message)
        return SweepRow(value, regime.label, report=outcome.report, audit=outcome.audit)

    # === VERIFY / KERNEL / PROFILE ===
    def verify(self, field_path, config: RunConfig, out_dir: Optional[Path] = None) -> AuditReport:
        params = config.problem
        grid = self.grid_for(config)
        u, _ = load_field(field_path, params=params, grid=grid)
        kernel = self.kernel_for(config, grid)
        u = RadialField(kernel.grid, u.values)
        result = audit(u, kernel, params, seed=config.solver.seed)
        if out_dir is not None:
            check_output_dir(out_dir)
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_json(Path(out_dir) / 'audit.json', result.to_dict())
        return result

    def build_kernel_file(self, config: RunConfig, path) -> Path:
        spec = config.kernel
        grid = self.grid_for(config)
        with self.monitor.stage('kernel_build'):
            kernel = build_kernel(grid, config.problem, spec.n_theta, matrix_free=False,
                                  memory_cap_mb=spec.memory_cap_mb, row_block=spec.row_block)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return save_kernel(path, kernel)

    def profile(self, config: RunConfig, tmax: float, steps: int,
                out_dir: Optional[Path] = None) -> Dict[str, Any]:
        """E(t phi) on [0, tmax] for the standard bump, with t*, t1 and the ray maximum"""
        if not tmax > 0.0:
            raise ConfigError(f"tmax must be positive, got {tmax}")
        if int(steps) != steps or steps < 2:
            raise ConfigError(f"profile needs steps >= 2, got {steps}")
        params = config.problem
        grid = self.grid_for(config)
        kernel = self.kernel_for(config, grid)
        phi = gaussian_bump(kernel.grid, params)
        radius, level = mountain_pass_lower_bound(phi, kernel, params)
        t1 = ray_threshold(phi, kernel, params)
        t_star = t1 / params.p ** (1.0 / (2.0 * params.p - 2.0))
        points = ray_profile(phi, kernel, params, np.linspace(0.0, float(tmax), int(steps)))
        result = {'t_star': t_star, 't1': t1, 'ray_max': level, 'radius': radius,
                  'profile': points}
        if out_dir is not None:
            check_output_dir(out_dir)
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_ray_profile(out / 'ray_profile.csv', points)
            if config.outputs.emit_svg:
                plot_ray_profile(out / 'ray_profile.svg', points, t_star=t_star, t1=t1)
        return result

    # === DIAGNOSTICS ===
    def performance_report(self) -> str:
        return self.monitor.get_performance_report()

    def get_status(self) -> Dict[str, Any]:
        return {
            'kernel_backend': kernel_backend(),
            'threads': self.threads,
            'kernel_cache': self.kernel_cache.get_stats(),
            'gpu': global_gpu_accelerator.get_accelerator_status(),
        }
