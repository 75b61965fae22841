from .geometry import ProblemParams, classify_regime, pohozaev_coefficients
from .grid_ops import RadialField, RadialGrid, build_grid
from .nonlocal_ops import KernelMatrix, build_kernel
from .variational import EnergyBreakdown, energy
from .solver import SolveReport, SolverConfig, mountain_pass_solve, solve_ground_state
from .audit import AuditReport, audit

__all__ = [
    'ProblemParams',
    'classify_regime',
    'pohozaev_coefficients',
    'RadialField',
    'RadialGrid',
    'build_grid',
    'KernelMatrix',
    'build_kernel',
    'EnergyBreakdown',
    'energy',
    'SolveReport',
    'SolverConfig',
    'mountain_pass_solve',
    'solve_ground_state',
    'AuditReport',
    'audit'
]
