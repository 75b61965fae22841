"""
Defaults, file-format tags and exit codes
"""

# Solver defaults (SolverConfig)
SOLVER_DEFAULTS = {
    'tol': 1e-6,                 # weighted-L2 residual tolerance
    'max_iters': 20000,
    'step0': 1.0,                # initial step, reset every iteration
    'backtrack': 0.5,            # Armijo reduction factor
    'armijo': 1e-4,              # sufficient-decrease constant
    'max_backtracks': 40,
    'init_kind': 'gaussian_bump',
    'init_path': None,
    'seed': 0,
    'log_every': 100,
    'mp_tol': 1e-4,              # mountain-pass residual tolerance
    'mp_reparam_every': 5,
    'allow_nonadmissible': False,
    'probe_iters': 400,
}

# Grid defaults (nr, ns, R, S)
GRID_DEFAULTS = {
    'nr': 48,
    'ns': 48,
    'R': 12.0,
    'S': 12.0,
}

# Kernel defaults
KERNEL_DEFAULTS = {
    'n_theta': 32,
    'cache_path': None,
    'matrix_free': False,
    'memory_cap_mb': 2048.0,
    'row_block': 256,            # rows per block in assembly and matrix-free apply
}

OUTPUT_DEFAULTS = {
    'directory': 'gc_out',
    'emit_field': True,
    'emit_svg': True,
}

# Diagonal desingularisation: 4x4 sub-cells, refined twice toward the singular node
SELF_CELL_SPLIT = 4
SELF_CELL_LEVELS = 2
# Cells up to this many steps away are integrated on sub-cells with a finer angular rule
NEAR_FIELD_RADIUS = 2
NEAR_THETA_FACTOR = 2

# Divergence window for ||u||_gamma relative to the initial iterate
DIVERGENCE_WINDOW = (1e-8, 1e8)

# Regularity sanity checks
TAIL_FRACTION = 0.8              # outer 20% of each axis
TAIL_MASS_FLAG = 1e-4
HOLDER_EXPONENT = 0.5

# Regularity theorem window for mu
REGULARITY_MU_MAX = 4.0

# File formats
FIELD_MAGIC = '# grushin-field v1'
FIELD_HEADER_KEYS = ('m', 'ell', 'gamma', 'mu', 'p', 'nr', 'ns', 'R', 'S')
KERNEL_MAGIC = b'GKRN1'

# Report keys in emission order
REPORT_KEYS = (
    'params', 'grid', 'config', 'A', 'B', 'D', 'E', 'residual',
    'nehari_residual', 'pohozaev_residual', 'iters', 'converged',
    'wall_time_seconds',
)

SWEEP_PARAMS = ('p', 'mu', 'gamma')
SWEEP_COLUMNS = ('value', 'E', 'A', 'B', 'D', 'pohozaev_rel', 'converged', 'regime')

# Exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2

# Environment
THREADS_ENV = 'GC_THREADS'

# Mountain-pass path endpoint: t_end = margin * t1 on the ray through the bump
MP_ENDPOINT_MARGIN = 1.5
MP_MIN_NODES = 8
# Path deformation hands over to the climb once the highest node's path-normal
# residual is below this fraction of its norm, or the level stops dropping
MP_DEFORM_TOL = 5e-2
MP_LEVEL_STALL = 1e-4

# Nonexistence probe classification on |u|_gamma relative to the start
PROBE_COLLAPSE_RATIO = 1e-3
PROBE_ESCAPE_RATIO = 1e3

# HLS audit: mass of |u|^q allowed outside the region a dilation keeps in view
SUPPORT_TOL = 1e-6
HLS_T_VALUES = (0.5, 1.0, 2.0)
# Interpolated shrinking dilations: at most this share of the L^q mass may end up
# in the first RESOLUTION_CELLS cells of each axis
RESOLUTION_CELLS = 2
RESOLUTION_TOL = 0.5
