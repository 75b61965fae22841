"""
Bi-radial grid: weighted quadrature and the discrete Grushin operator

Fields live on a cell-centred tensor grid in (r, s) = (|x|, |y|). The measure
r^{m-1} s^{ell-1} dr ds carries the sphere areas, and the operator is the negative
form-gradient of a face-based Dirichlet form, so it is symmetric and nonpositive
in the weighted inner product by construction.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import factorized
from scipy.special import gamma as gamma_fn

from .geometry import ProblemParams
from ..utils.errors import GridMismatchError, ParameterError

logger = logging.getLogger(__name__)


def sphere_area(d: int) -> float:
    """Area of the unit sphere S^{d-1} in R^d; 2 for d = 1"""
    return 2.0 * math.pi ** (d / 2.0) / gamma_fn(d / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Cell-centred (r, s) grid with quadrature weights for r^{m-1} s^{ell-1} dr ds"""

    nr: int
    ns: int
    R: float
    S: float
    m: int
    ell: int
    r_nodes: np.ndarray
    s_nodes: np.ndarray
    w: np.ndarray

    @property
    def dr(self) -> float:
        return self.R / self.nr

    @property
    def ds(self) -> float:
        return self.S / self.ns

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nr, self.ns)

    @property
    def size(self) -> int:
        return self.nr * self.ns

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r_nodes, self.s_nodes, indexing='ij')

    def same_as(self, other: 'RadialGrid') -> bool:
        return other is self or (
            (self.nr, self.ns, self.m, self.ell) == (other.nr, other.ns, other.m, other.ell)
            and self.R == other.R and self.S == other.S
        )

    def describe(self) -> dict:
        return {'nr': self.nr, 'ns': self.ns, 'R': self.R, 'S': self.S}


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a bi-radial function u(|x|, |y|) on a RadialGrid"""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise GridMismatchError(
                f"field shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def with_values(self, values: np.ndarray) -> 'RadialField':
        return RadialField(self.grid, values)

    def scaled(self, c: float) -> 'RadialField':
        return RadialField(self.grid, c * self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def build_grid(nr: int, ns: int, R: float, S: float, params: ProblemParams) -> RadialGrid:
    if int(nr) != nr or int(ns) != ns or nr < 4 or ns < 4:
        raise ParameterError(f"grid needs nr, ns >= 4, got nr={nr}, ns={ns}")
    if not (R > 0.0 and S > 0.0 and math.isfinite(R) and math.isfinite(S)):
        raise ParameterError(f"truncation radii must be positive, got R={R}, S={S}")
    nr, ns, R, S = int(nr), int(ns), float(R), float(S)
    dr, ds = R / nr, S / ns
    r_nodes = (np.arange(nr) + 0.5) * dr
    s_nodes = (np.arange(ns) + 0.5) * ds
    sigma = sphere_area(params.m) * sphere_area(params.ell)
    w = sigma * np.outer(r_nodes ** (params.m - 1), s_nodes ** (params.ell - 1)) * dr * ds
    for arr in (r_nodes, s_nodes, w):
        arr.setflags(write=False)
    return RadialGrid(nr, ns, R, S, params.m, params.ell, r_nodes, s_nodes, w)


def _check_grid(grid: RadialGrid, params: ProblemParams) -> None:
    if grid.m != params.m or grid.ell != params.ell:
        raise GridMismatchError(
            f"grid built for (m={grid.m}, ell={grid.ell}), params have (m={params.m}, ell={params.ell})"
        )


def _check_same(f: RadialField, g: RadialField) -> None:
    if not f.grid.same_as(g.grid):
        raise GridMismatchError("fields live on different grids")


# === QUADRATURE ===

def integrate(f: RadialField) -> float:
    return float(np.sum(f.grid.w * f.values))


def inner(f: RadialField, g: RadialField) -> float:
    """Weighted inner product <f, g>_w"""
    _check_same(f, g)
    return float(np.sum(f.grid.w * f.values * g.values))


def lebesgue_norm(f: RadialField, q: float) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(f.values)))
    if q <= 0.0:
        raise ParameterError(f"Lebesgue exponent must be positive, got {q}")
    return float(np.sum(f.grid.w * np.abs(f.values) ** q)) ** (1.0 / q)


# === DISCRETE OPERATOR ===

@lru_cache(maxsize=32)
def stiffness_matrix(grid: RadialGrid, gamma: float) -> sparse.csr_matrix:
    """
    Symmetric positive semidefinite L with a(u, v) = u^T L v.

    r-faces sit at r = (i+1) dr, s-faces at s = (j+1) ds; the outermost faces couple
    to a zero ghost value (Dirichlet at r = R, s = S) and the axis faces carry no
    flux (even reflection across r = 0 and s = 0).
    """
    nr, ns, m, ell = grid.nr, grid.ns, grid.m, grid.ell
    dr, ds = grid.dr, grid.ds
    sigma = sphere_area(m) * sphere_area(ell)
    r_c, s_c = grid.r_nodes, grid.s_nodes
    r_f = (np.arange(nr) + 1.0) * dr
    s_f = (np.arange(ns) + 1.0) * ds
    index = np.arange(nr * ns).reshape(nr, ns)

    # r-direction face coefficients, shape (nr, ns); row i is the face between i and i+1
    c_r = sigma * np.outer(r_f ** (m - 1), s_c ** (ell - 1)) * ds / dr
    # s-direction face coefficients; r^{2 gamma} taken at the cell centre
    c_s = sigma * np.outer(r_c ** (m - 1) * r_c ** (2.0 * gamma), s_f ** (ell - 1)) * dr / ds

    diag = np.zeros((nr, ns))
    diag += c_r
    diag[1:, :] += c_r[:-1, :]
    diag += c_s
    diag[:, 1:] += c_s[:, :-1]

    rows = [index.ravel()]
    cols = [index.ravel()]
    vals = [diag.ravel()]
    # interior couplings, both orientations
    a, b = index[:-1, :].ravel(), index[1:, :].ravel()
    off_r = -c_r[:-1, :].ravel()
    a2, b2 = index[:, :-1].ravel(), index[:, 1:].ravel()
    off_s = -c_s[:, :-1].ravel()
    rows += [a, b, a2, b2]
    cols += [b, a, b2, a2]
    vals += [off_r, off_r, off_s, off_s]
    L = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    ).tocsr()
    L.sum_duplicates()
    return L


@lru_cache(maxsize=32)
def shifted_solver(grid: RadialGrid, gamma: float) -> Callable[[np.ndarray], np.ndarray]:
    """Factorised (L + W): solves (-Delta_gamma + I) h = g in weighted form"""
    L = stiffness_matrix(grid, gamma)
    W = sparse.diags(grid.w.ravel())
    logger.debug("factorising shifted Grushin operator on %dx%d grid", grid.nr, grid.ns)
    return factorized((L + W).tocsc())


def apply_grushin_laplacian(u: RadialField, params: ProblemParams) -> RadialField:
    """Discrete Delta_gamma u = -W^{-1} L u"""
    _check_grid(u.grid, params)
    L = stiffness_matrix(u.grid, params.gamma)
    lu = (L @ u.values.ravel()).reshape(u.grid.shape)
    return u.with_values(-lu / u.grid.w)


def dirichlet_energy(u: RadialField, params: ProblemParams) -> float:
    """A(u) = discrete integral of u_r^2 + r^{2 gamma} u_s^2"""
    _check_grid(u.grid, params)
    L = stiffness_matrix(u.grid, params.gamma)
    flat = u.values.ravel()
    return float(flat @ (L @ flat))


def grushin_norm_sq(u: RadialField, params: ProblemParams) -> float:
    return dirichlet_energy(u, params) + float(np.sum(u.grid.w * u.values ** 2))


# === DILATIONS ===

def _padded_axes(grid: RadialGrid, values: np.ndarray):
    # even reflection below the first node, zero ghost one cell past the outer radius
    r_ax = np.concatenate([[-grid.r_nodes[0]], grid.r_nodes, [grid.R + 0.5 * grid.dr]])
    s_ax = np.concatenate([[-grid.s_nodes[0]], grid.s_nodes, [grid.S + 0.5 * grid.ds]])
    padded = np.zeros((grid.nr + 2, grid.ns + 2))
    padded[1:-1, 1:-1] = values
    padded[0, 1:-1] = values[0, :]
    padded[1:-1, 0] = values[:, 0]
    padded[0, 0] = values[0, 0]
    return r_ax, s_ax, padded


def bilinear_sampler(u: RadialField) -> RegularGridInterpolator:
    """Bilinear interpolant of u, zero outside the computational box"""
    r_ax, s_ax, padded = _padded_axes(u.grid, u.values)
    return RegularGridInterpolator((r_ax, s_ax), padded, method='linear',
                                   bounds_error=False, fill_value=0.0)


def dilate_field(u: RadialField, t: float, params: ProblemParams) -> RadialField:
    """Pull-back u o delta_{1/t}: v(r, s) = u(r/t, s/t^{1+gamma})"""
    _check_grid(u.grid, params)
    if not t > 0.0:
        raise ParameterError(f"dilation factor must be positive, got {t}")
    if t == 1.0:
        return u.with_values(u.values)
    rr, ss = u.grid.mesh()
    points = np.stack([rr.ravel() / t, ss.ravel() / t ** (1.0 + params.gamma)], axis=-1)
    values = bilinear_sampler(u)(points).reshape(u.grid.shape)
    return u.with_values(values)


def gaussian_bump(grid: RadialGrid, params: ProblemParams, width: float = 1.0) -> RadialField:
    """exp(-(r^2 + s^2/(1+gamma)^2)/width^2), the anisotropy-matched positive bump"""
    rr, ss = grid.mesh()
    g1 = 1.0 + params.gamma
    return RadialField(grid, np.exp(-(rr ** 2 + (ss / g1) ** 2) / width ** 2))
