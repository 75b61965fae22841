"""
RunConfig and its TOML front end

Sections: [problem] (required), [grid], [solver], [kernel], [outputs]. Anything
not listed in the defaults tables is rejected by name.
"""
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..core.geometry import ProblemParams
from ..core.nonlocal_ops import MIN_N_THETA
from ..core.solver import SolverConfig
from ..utils.constants import GRID_DEFAULTS, KERNEL_DEFAULTS, OUTPUT_DEFAULTS, SOLVER_DEFAULTS
from ..utils.errors import ConfigError, GrushinChoquardError

logger = logging.getLogger(__name__)

PROBLEM_KEYS = ('m', 'ell', 'gamma', 'mu', 'p')
SECTIONS = ('problem', 'grid', 'solver', 'kernel', 'outputs')


@dataclass(frozen=True)
class GridSpec:
    nr: int = GRID_DEFAULTS['nr']
    ns: int = GRID_DEFAULTS['ns']
    R: float = GRID_DEFAULTS['R']
    S: float = GRID_DEFAULTS['S']

    def __post_init__(self):
        for name in ('nr', 'ns'):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 4:
                raise ConfigError(f"grid.{name} must be an integer >= 4, got {value!r}")
        for name in ('R', 'S'):
            if not float(getattr(self, name)) > 0.0:
                raise ConfigError(f"grid.{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class KernelSpec:
    n_theta: int = KERNEL_DEFAULTS['n_theta']
    cache_path: Optional[str] = KERNEL_DEFAULTS['cache_path']
    matrix_free: bool = KERNEL_DEFAULTS['matrix_free']
    memory_cap_mb: float = KERNEL_DEFAULTS['memory_cap_mb']
    row_block: int = KERNEL_DEFAULTS['row_block']

    def __post_init__(self):
        if isinstance(self.n_theta, bool) or int(self.n_theta) != self.n_theta or self.n_theta < MIN_N_THETA:
            raise ConfigError(f"kernel.n_theta must be an integer >= {MIN_N_THETA}, got {self.n_theta!r}")
        if not self.memory_cap_mb > 0:
            raise ConfigError(f"kernel.memory_cap_mb must be positive, got {self.memory_cap_mb!r}")
        if int(self.row_block) != self.row_block or self.row_block < 1:
            raise ConfigError(f"kernel.row_block must be a positive integer, got {self.row_block!r}")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = OUTPUT_DEFAULTS['directory']
    emit_field: bool = OUTPUT_DEFAULTS['emit_field']
    emit_svg: bool = OUTPUT_DEFAULTS['emit_svg']


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemParams
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    source: Optional[str] = None

    def with_problem(self, **changes) -> 'RunConfig':
        return RunConfig(self.problem.replace(**changes), self.grid, self.solver,
                         self.kernel, self.outputs, self.source)

    def with_solver(self, **changes) -> 'RunConfig':
        return RunConfig(self.problem, self.grid, self.solver.replace(**changes),
                         self.kernel, self.outputs, self.source)

    def with_outputs(self, **changes) -> 'RunConfig':
        values = asdict(self.outputs)
        values.update(changes)
        return RunConfig(self.problem, self.grid, self.solver, self.kernel,
                         OutputSpec(**values), self.source)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'problem': self.problem.to_dict(),
            'grid': asdict(self.grid),
            'solver': self.solver.to_dict(),
            'kernel': asdict(self.kernel),
            'outputs': asdict(self.outputs),
        }


def _check_keys(section: str, table: Mapping[str, Any], allowed) -> None:
    if not isinstance(table, Mapping):
        raise ConfigError(f"[{section}] must be a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")


def config_from_dict(data: Mapping[str, Any], source: Optional[str] = None) -> RunConfig:
    for section in data:
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
    if 'problem' not in data:
        raise ConfigError("missing [problem] section")
    problem = data['problem']
    _check_keys('problem', problem, PROBLEM_KEYS)
    missing = [k for k in PROBLEM_KEYS if k not in problem]
    if missing:
        raise ConfigError(f"missing key problem.{missing[0]}")

    grid = data.get('grid', {})
    solver = data.get('solver', {})
    kernel = data.get('kernel', {})
    outputs = data.get('outputs', {})
    _check_keys('grid', grid, GRID_DEFAULTS)
    _check_keys('solver', solver, SOLVER_DEFAULTS)
    _check_keys('kernel', kernel, KERNEL_DEFAULTS)
    _check_keys('outputs', outputs, OUTPUT_DEFAULTS)

    try:
        return RunConfig(
            problem=ProblemParams(**problem),
            grid=GridSpec(**grid),
            solver=SolverConfig(**solver),
            kernel=KernelSpec(**kernel),
            outputs=OutputSpec(**outputs),
            source=source,
        )
    except ConfigError:
        raise
    except (GrushinChoquardError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}")


def load_config(path: Union[str, Path]) -> RunConfig:
    """Parse and validate; TOML syntax errors carry line and column"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, 'rb') as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        line, column = _error_position(e)
        raise ConfigError(f"config parse error in {path}: {e}", line=line, column=column)
    config = config_from_dict(data, source=str(path))
    logger.debug("loaded config %s", path)
    return config


def _error_position(error: Exception):
    line = getattr(error, 'lineno', None)
    column = getattr(error, 'colno', None)
    if line is None:
        # tomli before 2.1 only puts the position in the message
        text = str(error)
        marker = '(at line '
        if marker in text:
            tail = text.split(marker, 1)[1].rstrip(')')
            parts = tail.split(', column ')
            try:
                line, column = int(parts[0]), int(parts[1])
            except (IndexError, ValueError):
                line, column = None, None
    return line, column


def check_output_dir(directory: Union[str, Path]) -> Path:
    """The directory (or its nearest existing parent) must be writable; nothing is created here"""
    path = Path(directory)
    probe = path
    while not probe.exists():
        if probe.parent == probe:
            break
        probe = probe.parent
    if probe.exists() and not probe.is_dir():
        raise ConfigError(f"output path {probe} is not a directory")
    if not os.access(probe, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path
