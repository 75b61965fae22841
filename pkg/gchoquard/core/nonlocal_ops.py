"""
Choquard machinery on bi-radial grids

The Riesz-type kernel d(z - w)^{-mu} is averaged over the unit spheres of x, x', y, y'
so that it acts on functions of (|x|, |y|) only. Entries are assembled once per
(grid, mu, gamma, m, ell, n_theta); the exponent p never enters the kernel.
"""
import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.special import roots_jacobi

from .geometry import ProblemParams, choquard_lebesgue_exponent
from .grid_ops import RadialField, RadialGrid, lebesgue_norm, sphere_area
from .gpu_accelerator import global_gpu_accelerator
from .performance import perf_monitor
from ..utils.constants import (
    KERNEL_DEFAULTS,
    NEAR_FIELD_RADIUS,
    NEAR_THETA_FACTOR,
    SELF_CELL_LEVELS,
    SELF_CELL_SPLIT,
)
from ..utils.errors import (
    DegenerateFieldError,
    GridMismatchError,
    KernelMemoryError,
    ParameterError,
    SingularEvaluationError,
)

logger = logging.getLogger(__name__)

try:
    from numba import njit, prange
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

MIN_N_THETA = 4


# === ANGULAR QUADRATURE ===

@lru_cache(maxsize=64)
def angular_rule(d: int, n_theta: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes t = cos(theta) and normalised weights for averaging over S^{d-1}.

    The pushforward of the uniform sphere measure to t has density proportional to
    (1 - t^2)^{(d-3)/2}, integrated exactly by Gauss-Jacobi. For d = 1 the "sphere"
    is {+1, -1}.
    """
    if d == 1:
        nodes, weights = np.array([1.0, -1.0]), np.array([0.5, 0.5])
    else:
        alpha = (d - 3) / 2.0
        nodes, weights = roots_jacobi(n_theta, alpha, alpha)
        weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def kernel_values(r, s, r2, s2, rule_x, rule_y, gamma: float, mu: float) -> np.ndarray:
    # broadcast (r, s) against (r2, s2); two trailing axes carry the angles
    tx, wx = rule_x
    ty, wy = rule_y
    r, s, r2, s2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, s, r2, s2)))
    g1 = gamma + 1.0
    kappa = mu / (2.0 * g1)
    X = r[..., None] ** 2 + r2[..., None] ** 2 - 2.0 * r[..., None] * r2[..., None] * tx
    Y = s[..., None] ** 2 + s2[..., None] ** 2 - 2.0 * s[..., None] * s2[..., None] * ty
    X = np.maximum(X, 0.0)
    Y = np.maximum(Y, 0.0)
    base = X[..., :, None] ** g1 + Y[..., None, :]
    base = np.where(base > 0.0, base, np.inf)
    vals = base ** (-kappa)
    return np.einsum('...ab,a,b->...', vals, wx, wy)


# === SELF-CELL DESINGULARISATION ===

@lru_cache(maxsize=8)
def _graded_offsets(split: int, levels: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Midpoints and area fractions of a graded subdivision of the unit cell
    [-1/2, 1/2]^2 refined toward its centre. Offsets are in cell-size units.
    """
    offs_r, offs_s, areas = [], [], []
    tol = 1e-12

    def refine(r0, r1, s0, s1, level):
        hr, hs = (r1 - r0) / split, (s1 - s0) / split
        for a in range(split):
            for b in range(split):
                lo_r, hi_r = r0 + a * hr, r0 + (a + 1) * hr
                lo_s, hi_s = s0 + b * hs, s0 + (b + 1) * hs
                touches = lo_r - tol <= 0.0 <= hi_r + tol and lo_s - tol <= 0.0 <= hi_s + tol
                if touches and level > 0:
                    refine(lo_r, hi_r, lo_s, hi_s, level - 1)
                else:
                    offs_r.append(0.5 * (lo_r + hi_r))
                    offs_s.append(0.5 * (lo_s + hi_s))
                    areas.append(hr * hs)

    refine(-0.5, 0.5, -0.5, 0.5, levels)
    out = (np.array(offs_r), np.array(offs_s), np.array(areas))
    for arr in out:
        arr.setflags(write=False)
    return out


def _one_sided_block(grid: RadialGrid, params: ProblemParams, rules, di: int, dj: int) -> np.ndarray:
    """(1/w) * integral of k(node, .) over the cell (di, dj) steps away, for every node that has one"""
    if di == 0 and dj == 0:
        off_r, off_s, frac = _graded_offsets(SELF_CELL_SPLIT, SELF_CELL_LEVELS)
    else:
        off_r, off_s, frac = _graded_offsets(SELF_CELL_SPLIT, 0)
    sigma = sphere_area(params.m) * sphere_area(params.ell)
    dr, ds = grid.dr, grid.ds
    i_lo, i_hi = max(0, -di), grid.nr - max(0, di)
    j_lo, j_hi = max(0, -dj), grid.ns - max(0, dj)
    out = np.full(grid.shape, np.nan)
    if i_lo >= i_hi or j_lo >= j_hi:
        return out
    s_c = grid.s_nodes[j_lo:j_hi, None]
    s_smp = grid.s_nodes[j_lo + dj:j_hi + dj, None] + off_s * ds
    w = grid.w
    for i in range(i_lo, i_hi):
        r_smp = grid.r_nodes[i + di] + off_r * dr
        k = kernel_values(grid.r_nodes[i], s_c, r_smp, s_smp, *rules, params.gamma, params.mu)
        rho = sigma * r_smp ** (params.m - 1) * s_smp ** (params.ell - 1) * frac * dr * ds
        out[i, j_lo:j_hi] = np.sum(k * rho, axis=-1) / w[i + di, j_lo + dj:j_hi + dj]
    return out


def near_field_entries(grid: RadialGrid, params: ProblemParams, n_theta: int,
                       radius: int = NEAR_FIELD_RADIUS) -> np.ndarray:
    """
    Kernel entries between each node and the cells within `radius` steps of it.

    Shape (nr, ns, 2*radius+1, 2*radius+1), indexed by offset + radius; NaN where the
    neighbour falls off the grid. Each entry is the mean of the two one-sided cell
    integrals, so the assembled matrix stays symmetric. The self cell is refined
    toward its node; the others use uniform sub-cells.
    """
    rules = (angular_rule(params.m, NEAR_THETA_FACTOR * n_theta),
             angular_rule(params.ell, NEAR_THETA_FACTOR * n_theta))
    width = 2 * radius + 1
    one_sided = np.full(grid.shape + (width, width), np.nan)
    for di in range(-radius, radius + 1):
        for dj in range(-radius, radius + 1):
            one_sided[..., di + radius, dj + radius] = _one_sided_block(grid, params, rules, di, dj)
    near = np.full_like(one_sided, np.nan)
    nr, ns = grid.shape
    for di in range(-radius, radius + 1):
        for dj in range(-radius, radius + 1):
            i_lo, i_hi = max(0, -di), nr - max(0, di)
            j_lo, j_hi = max(0, -dj), ns - max(0, dj)
            if i_lo >= i_hi or j_lo >= j_hi:
                continue
            there = one_sided[i_lo + di:i_hi + di, j_lo + dj:j_hi + dj, radius - di, radius - dj]
            here = one_sided[i_lo:i_hi, j_lo:j_hi, radius + di, radius + dj]
            near[i_lo:i_hi, j_lo:j_hi, radius + di, radius + dj] = 0.5 * (here + there)
    return near


def _near_pairs(grid: RadialGrid, radius: int):
    """Flat (row, column) indices of near-field pairs and their slots in the near table"""
    nr, ns = grid.shape
    ii, jj = np.meshgrid(np.arange(nr), np.arange(ns), indexing='ij')
    rows, cols, slots = [], [], []
    width = 2 * radius + 1
    for di in range(-radius, radius + 1):
        for dj in range(-radius, radius + 1):
            i2, j2 = ii + di, jj + dj
            ok = (i2 >= 0) & (i2 < nr) & (j2 >= 0) & (j2 < ns)
            rows.append((ii * ns + jj)[ok])
            cols.append((i2 * ns + j2)[ok])
            slots.append(((ii * ns + jj) * width * width + (di + radius) * width + dj + radius)[ok])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(slots)


def sphere_averaged_kernel(r: float, s: float, r2: float, s2: float, params: ProblemParams,
                           n_theta: int = KERNEL_DEFAULTS['n_theta'],
                           cell: Optional[Tuple[float, float]] = None) -> float:
    """
    Angular average of d(z - w)^{-mu} for |x| = r, |y| = s, |x'| = r2, |y'| = s2.

    Coincident points are singular; pass `cell=(dr, ds)` to get the cell-averaged
    value used on the kernel diagonal instead.
    """
    if n_theta < MIN_N_THETA:
        raise ParameterError(f"n_theta must be at least {MIN_N_THETA}, got {n_theta}")
    if min(r, s, r2, s2) < 0.0:
        raise ParameterError("radial coordinates must be nonnegative")
    rule_x = angular_rule(params.m, n_theta)
    rule_y = angular_rule(params.ell, n_theta)
    if r == r2 and s == s2:
        if cell is None:
            raise SingularEvaluationError(
                f"singular evaluation: coincident points (r={r}, s={s}) without desingularization"
            )
        dr, ds = cell
        off_r, off_s, frac = _graded_offsets(SELF_CELL_SPLIT, SELF_CELL_LEVELS)
        r_smp, s_smp = r + off_r * dr, s + off_s * ds
        if np.any(r_smp <= 0.0) or np.any(s_smp <= 0.0):
            raise ParameterError("cell must lie in the open quadrant r > 0, s > 0")
        k = kernel_values(r, s, r_smp, s_smp, rule_x, rule_y, params.gamma, params.mu)
        rho = r_smp ** (params.m - 1) * s_smp ** (params.ell - 1) * frac
        return float(np.sum(k * rho) / np.sum(rho))
    return float(kernel_values(r, s, r2, s2, rule_x, rule_y, params.gamma, params.mu))


# === PAIRWISE ASSEMBLY BACKENDS ===

def _pair_rows_numpy(r, s, tx, wx, ty, wy, gamma, mu, i_lo, i_hi, i2_lo):
    """Raw entries for rows i in [i_lo, i_hi) against columns i2 >= i2_lo"""
    nr, ns = r.size, s.size
    g1 = gamma + 1.0
    kappa = mu / (2.0 * g1)
    # (ns, ns, ny) table of the y-part, shared by every r-pair
    Y = s[:, None, None] ** 2 + s[None, :, None] ** 2 - 2.0 * s[:, None, None] * s[None, :, None] * ty
    Y = np.maximum(Y, 0.0)
    out = np.empty((i_hi - i_lo, ns, nr - i2_lo, ns))
    for a, i in enumerate(range(i_lo, i_hi)):
        for b, i2 in enumerate(range(i2_lo, nr)):
            X = np.maximum(r[i] * r[i] + r[i2] * r[i2] - 2.0 * r[i] * r[i2] * tx, 0.0) ** g1
            base = X[:, None, None, None] + Y[None, :, :, :]
            base = np.where(base > 0.0, base, np.inf)
            vals = (base ** (-kappa) * wy).sum(axis=-1)
            out[a, :, b, :] = np.tensordot(wx, vals, axes=(0, 0))
    return out


if HAS_NUMBA:
    @njit(parallel=True, cache=True)
    def _pair_rows_numba(r, s, tx, wx, ty, wy, gamma, mu, i_lo, i_hi, i2_lo):
        nr, ns = r.size, s.size
        nx, ny = tx.size, ty.size
        g1 = gamma + 1.0
        kappa = mu / (2.0 * g1)
        out = np.empty((i_hi - i_lo, ns, nr - i2_lo, ns))
        for a in prange(i_hi - i_lo):
            i = i_lo + a
            Xg = np.empty(nx)
            for b in range(nr - i2_lo):
                i2 = i2_lo + b
                for q in range(nx):
                    X = r[i] * r[i] + r[i2] * r[i2] - 2.0 * r[i] * r[i2] * tx[q]
                    if X < 0.0:
                        X = 0.0
                    Xg[q] = X ** g1
                for j in range(ns):
                    for j2 in range(ns):
                        acc = 0.0
                        for q in range(nx):
                            inner = 0.0
                            for e in range(ny):
                                Y = s[j] * s[j] + s[j2] * s[j2] - 2.0 * s[j] * s[j2] * ty[e]
                                if Y < 0.0:
                                    Y = 0.0
                                base = Xg[q] + Y
                                if base > 0.0:
                                    inner += wy[e] * base ** (-kappa)
                            acc += wx[q] * inner
                        out[a, j, b, j2] = acc
        return out


class _Backend:
    """Chooses the Numba kernel when it compiles, the NumPy one otherwise"""

    def __init__(self):
        self.name = 'numba' if HAS_NUMBA else 'numpy'
        self._announced = False

    def rows(self, *args):
        if not self._announced:
            logger.info("kernel assembly backend: %s", self.name)
            self._announced = True
        if self.name == 'numba':
            try:
                return _pair_rows_numba(*args)
            except Exception as e:
                warnings.warn(f"Numba kernel assembly failed, using NumPy: {e}")
                self.name = 'numpy'
        return _pair_rows_numpy(*args)


_backend = _Backend()


def kernel_backend() -> str:
    return _backend.name


# === KERNEL MATRIX ===

@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """
    Symmetric positive matrix of sphere-averaged kernel values on a grid.

    `entries` is None in matrix-free mode; rows are then recomputed per application
    and the sub-cell integrated `near_entries` patched in.
    """

    grid: RadialGrid
    mu: float
    gamma: float
    m: int
    ell: int
    n_theta: int
    entries: Optional[np.ndarray]
    near_entries: np.ndarray
    row_block: int = KERNEL_DEFAULTS['row_block']

    @property
    def matrix_free(self) -> bool:
        return self.entries is None

    @property
    def near_radius(self) -> int:
        return (self.near_entries.shape[-1] - 1) // 2

    @property
    def self_entries(self) -> np.ndarray:
        q = self.near_radius
        return self.near_entries[..., q, q]

    def matches(self, params: ProblemParams) -> bool:
        return (self.m, self.ell) == (params.m, params.ell) and \
            self.mu == params.mu and self.gamma == params.gamma

    def apply(self, weighted: np.ndarray) -> np.ndarray:
        """k @ v for a flat vector v of length nr*ns"""
        if self.entries is not None:
            return global_gpu_accelerator.matvec(self.entries, weighted)
        return self._apply_matrix_free(weighted)

    def _apply_matrix_free(self, weighted: np.ndarray) -> np.ndarray:
        grid = self.grid
        ns = grid.ns
        tx, wx = angular_rule(self.m, self.n_theta)
        ty, wy = angular_rule(self.ell, self.n_theta)
        out = np.empty(grid.size)
        rows_at, cols_at, slots = _near_pairs(grid, self.near_radius)
        near_flat = self.near_entries.ravel()
        for i_lo, i_hi in _row_chunks(grid.nr, ns, self.row_block):
            rows = _backend.rows(grid.r_nodes, grid.s_nodes, tx, wx, ty, wy,
                                 self.gamma, self.mu, i_lo, i_hi, 0)
            rows = rows.reshape((i_hi - i_lo) * ns, grid.size)
            sel = (rows_at >= i_lo * ns) & (rows_at < i_hi * ns)
            rows[rows_at[sel] - i_lo * ns, cols_at[sel]] = near_flat[slots[sel]]
            out[i_lo * ns:i_hi * ns] = rows @ weighted
        return out


def _row_chunks(nr: int, ns: int, row_block: int):
    step = max(1, row_block // ns)
    for i_lo in range(0, nr, step):
        yield i_lo, min(nr, i_lo + step)


def dense_size_mb(grid: RadialGrid) -> float:
    return grid.size ** 2 * 8 / 2 ** 20


@perf_monitor.time_it
def build_kernel(grid: RadialGrid, params: ProblemParams,
                 n_theta: int = KERNEL_DEFAULTS['n_theta'],
                 matrix_free: bool = False,
                 memory_cap_mb: float = KERNEL_DEFAULTS['memory_cap_mb'],
                 row_block: int = KERNEL_DEFAULTS['row_block']) -> KernelMatrix:
    if grid.m != params.m or grid.ell != params.ell:
        raise GridMismatchError("grid and params disagree on (m, ell)")
    if int(n_theta) != n_theta or n_theta < MIN_N_THETA:
        raise ParameterError(f"n_theta must be an integer >= {MIN_N_THETA}, got {n_theta}")
    n_theta = int(n_theta)
    size_mb = dense_size_mb(grid)
    if not matrix_free and size_mb > memory_cap_mb:
        raise KernelMemoryError(
            f"dense kernel needs {size_mb:.0f} MB > cap {memory_cap_mb:.0f} MB; "
            "use a smaller grid or matrix_free = true"
        )

    near = near_field_entries(grid, params, n_theta)
    near.setflags(write=False)
    if matrix_free:
        logger.info("matrix-free kernel on %dx%d grid (n_theta=%d)", grid.nr, grid.ns, n_theta)
        return KernelMatrix(grid, params.mu, params.gamma, params.m, params.ell, n_theta,
                            None, near, row_block)

    logger.info("assembling %dx%d dense kernel (%.1f MB, n_theta=%d)",
                grid.size, grid.size, size_mb, n_theta)
    ns, size = grid.ns, grid.size
    tx, wx = angular_rule(params.m, n_theta)
    ty, wy = angular_rule(params.ell, n_theta)
    entries = np.empty((size, size))
    for i_lo, i_hi in _row_chunks(grid.nr, ns, row_block):
        rows = _backend.rows(grid.r_nodes, grid.s_nodes, tx, wx, ty, wy,
                             params.gamma, params.mu, i_lo, i_hi, i_lo)
        lo, hi = i_lo * ns, i_hi * ns
        entries[lo:hi, lo:] = rows.reshape(hi - lo, size - lo)
        # lower triangle mirrors the upper one exactly
        blk = entries[lo:hi, lo:hi]
        entries[lo:hi, lo:hi] = np.triu(blk) + np.triu(blk, 1).T
        entries[lo:hi, :lo] = entries[:lo, lo:hi].T
    rows_at, cols_at, slots = _near_pairs(grid, NEAR_FIELD_RADIUS)
    entries[rows_at, cols_at] = near.ravel()[slots]
    entries.setflags(write=False)
    return KernelMatrix(grid, params.mu, params.gamma, params.m, params.ell, n_theta,
                        entries, near, row_block)


def kernel_from_entries(grid: RadialGrid, params: ProblemParams, n_theta: int,
                        entries: np.ndarray) -> KernelMatrix:
    """Wrap stored entries (e.g. from a GKRN1 file) as a KernelMatrix"""
    entries = np.asarray(entries, dtype=np.float64)
    if entries.shape != (grid.size, grid.size):
        raise GridMismatchError(f"entries shape {entries.shape} does not match grid size {grid.size}")
    width = 2 * NEAR_FIELD_RADIUS + 1
    near = np.full(grid.shape + (width, width), np.nan)
    rows_at, cols_at, slots = _near_pairs(grid, NEAR_FIELD_RADIUS)
    near.ravel()[slots] = entries[rows_at, cols_at]
    near.setflags(write=False)
    entries.setflags(write=False)
    return KernelMatrix(grid, params.mu, params.gamma, params.m, params.ell, int(n_theta),
                        entries, near)


# === CONVOLUTION AND THE CHOQUARD TERM ===

def _check_kernel(kernel: KernelMatrix, params: ProblemParams) -> None:
    if not kernel.matches(params):
        raise ParameterError(
            f"kernel built for (m={kernel.m}, ell={kernel.ell}, gamma={kernel.gamma}, mu={kernel.mu}) "
            f"used with {params.to_dict()}"
        )


def convolve(kernel: KernelMatrix, f: RadialField) -> RadialField:
    """K_ij = sum over (i', j') of k[(i,j),(i',j')] w_{i'j'} f_{i'j'}"""
    if not f.grid.same_as(kernel.grid):
        raise GridMismatchError("field and kernel live on different grids")
    weighted = (f.grid.w * f.values).ravel()
    return f.with_values(kernel.apply(weighted).reshape(f.grid.shape))


def choquard_potential(kernel: KernelMatrix, u: RadialField, params: ProblemParams) -> RadialField:
    """K = d^{-mu} * |u|^p"""
    _check_kernel(kernel, params)
    return convolve(kernel, u.with_values(np.abs(u.values) ** params.p))


def choquard_term(kernel: KernelMatrix, u: RadialField, params: ProblemParams) -> float:
    """D(u) = <K, |u|^p>_w"""
    _check_kernel(kernel, params)
    f = np.abs(u.values) ** params.p
    K = convolve(kernel, u.with_values(f))
    return float(np.sum(u.grid.w * K.values * f))


def hls_ratio(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> float:
    """D(u) / |u|_q^{2p} with q = 2pN/(2N - mu)"""
    q = choquard_lebesgue_exponent(params)
    norm = lebesgue_norm(u, q)
    if norm == 0.0:
        raise DegenerateFieldError("degenerate field: HLS ratio of the zero field")
    return choquard_term(kernel, u, params) / norm ** (2.0 * params.p)


def kernel_summary(kernel: KernelMatrix) -> dict:
    out = {
        'nr': kernel.grid.nr, 'ns': kernel.grid.ns, 'n_theta': kernel.n_theta,
        'matrix_free': kernel.matrix_free, 'backend': kernel_backend(),
    }
    if kernel.entries is not None:
        out['min_entry'] = float(kernel.entries.min())
        out['max_entry'] = float(kernel.entries.max())
    out['max_self_entry'] = float(kernel.self_entries.max())
    return out
