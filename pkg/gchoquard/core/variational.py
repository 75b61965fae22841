"""
Energy functional, its gradient and the Nehari / mountain-pass ray structure

E(u) = (A + B)/2 - D/(2p) with A the Dirichlet energy, B the L^2 mass and D the
Choquard term. Along a ray t -> t u everything reduces to the two scalars
|u|_gamma^2 = A + B and D.
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .geometry import ProblemParams
from .grid_ops import (
    RadialField,
    apply_grushin_laplacian,
    dirichlet_energy,
    grushin_norm_sq,
    shifted_solver,
)
from .nonlocal_ops import KernelMatrix, choquard_potential
from ..utils.errors import DegenerateFieldError


@dataclass(frozen=True)
class EnergyBreakdown:
    A: float
    B: float
    D: float
    E: float

    @property
    def norm_sq(self) -> float:
        return self.A + self.B

    def to_dict(self) -> dict:
        return {'A': self.A, 'B': self.B, 'D': self.D, 'E': self.E}


@dataclass(frozen=True)
class EnergyState:
    """One evaluation of E at u: scalars plus the fields the gradient needs"""

    breakdown: EnergyBreakdown
    potential: RadialField
    gradient: RadialField


def _combine(A: float, B: float, D: float, p: float) -> EnergyBreakdown:
    return EnergyBreakdown(A, B, D, 0.5 * (A + B) - D / (2.0 * p))


def nonlinearity(u: RadialField, K: RadialField, p: float) -> RadialField:
    """K |u|^{p-2} u, written as K sign(u) |u|^{p-1} so u = 0 maps to 0 for every p > 1"""
    return u.with_values(K.values * np.sign(u.values) * np.abs(u.values) ** (p - 1.0))


def evaluate(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
             potential: Optional[RadialField] = None) -> EnergyState:
    """
    Energy and strong-form residual from a single convolution.

    A precomputed `potential` K(u) skips the convolution; callers rescaling a field
    by t pass t^p K.
    """
    K = potential if potential is not None else choquard_potential(kernel, u, params)
    A = dirichlet_energy(u, params)
    B = float(np.sum(u.grid.w * u.values ** 2))
    f = np.abs(u.values) ** params.p
    D = float(np.sum(u.grid.w * K.values * f))
    lap = apply_grushin_laplacian(u, params)
    g = -lap.values + u.values - nonlinearity(u, K, params.p).values
    return EnergyState(_combine(A, B, D, params.p), K, u.with_values(g))


def energy(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> EnergyBreakdown:
    return evaluate(u, kernel, params).breakdown


def energy_gradient(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> RadialField:
    """g = -Delta_gamma u + u - K |u|^{p-2} u, so that <g, v>_w = E'(u)[v]"""
    return evaluate(u, kernel, params).gradient


def sobolev_gradient(g: RadialField, params: ProblemParams) -> RadialField:
    """Riesz representative h of g in H^1_gamma: (-Delta_gamma + I) h = g"""
    solve = shifted_solver(g.grid, params.gamma)
    h = solve((g.grid.w * g.values).ravel())
    return g.with_values(h.reshape(g.grid.shape))


def weighted_norm(f: RadialField) -> float:
    return float(np.sqrt(np.sum(f.grid.w * f.values ** 2)))


def _ray_scalars(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> Tuple[float, float]:
    b = energy(u, kernel, params)
    return b.norm_sq, b.D


def nehari_factor(norm_sq: float, D: float, p: float) -> float:
    if norm_sq <= 0.0 or D <= 0.0:
        raise DegenerateFieldError("degenerate field: Nehari scaling needs u != 0 and D(u) > 0")
    return (norm_sq / D) ** (1.0 / (2.0 * p - 2.0))


def nehari_scaling(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> float:
    """t* = (|u|_gamma^2 / D(u))^{1/(2p-2)}, putting t* u on the Nehari set"""
    if u.is_zero():
        raise DegenerateFieldError("degenerate field: zero field has no Nehari scaling")
    norm_sq, D = _ray_scalars(u, kernel, params)
    return nehari_factor(norm_sq, D, params.p)


def ray_energy(t: float, norm_sq: float, D: float, p: float) -> float:
    return 0.5 * t * t * norm_sq - t ** (2.0 * p) * D / (2.0 * p)


def ray_profile(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                t_values: Iterable[float]) -> List[Tuple[float, float]]:
    """E(t u) from the closed ray formula; one convolution for the whole profile"""
    t_values = [float(t) for t in t_values]
    if not t_values:
        return []
    if u.is_zero():
        raise DegenerateFieldError("degenerate field: ray through the zero field")
    norm_sq, D = _ray_scalars(u, kernel, params)
    return [(t, ray_energy(t, norm_sq, D, params.p)) for t in t_values]


def ray_threshold(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> float:
    """Positive root t1 = (p |u|^2 / D)^{1/(2p-2)} of E(t u) = 0"""
    norm_sq, D = _ray_scalars(u, kernel, params)
    if D <= 0.0:
        raise DegenerateFieldError("degenerate field: D(u) = 0, the ray never turns negative")
    return (params.p * norm_sq / D) ** (1.0 / (2.0 * params.p - 2.0))


def mountain_pass_lower_bound(u: RadialField, kernel: KernelMatrix,
                              params: ProblemParams) -> Tuple[float, float]:
    """
    Radius and height of the ray maximum through u.

    Returns (R, a) with R = |t* u|_gamma and a = E(t* u) = (1/2 - 1/(2p)) R^2 > 0.
    """
    norm_sq, D = _ray_scalars(u, kernel, params)
    t_star = nehari_factor(norm_sq, D, params.p)
    radius = t_star * np.sqrt(norm_sq)
    return float(radius), ray_energy(t_star, norm_sq, D, params.p)


def nehari_project(u: RadialField, kernel: KernelMatrix, params: ProblemParams) -> RadialField:
    return u.scaled(nehari_scaling(u, kernel, params))


def norm_gamma(u: RadialField, params: ProblemParams) -> float:
    return float(np.sqrt(grushin_norm_sq(u, params)))
