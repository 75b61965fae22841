"""
Grushin geometry primitives and exponent arithmetic

Problem parameters (m, ell, gamma, mu, p), the Grushin distance, anisotropic
dilations, and the admissibility / nonexistence bookkeeping derived from the
Nehari and Pohozaev identities.
"""
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..utils.constants import REGULARITY_MU_MAX
from ..utils.errors import ParameterError

# Relative slack when snapping exponent numerators to zero at interval endpoints
_ENDPOINT_SLACK = 8.0 * np.finfo(float).eps


@dataclass(frozen=True)
class ProblemParams:
    """Single source of truth for (m, ell, gamma, mu, p)"""

    m: int
    ell: int
    gamma: float
    mu: float
    p: float

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ParameterError(f"m must be a positive integer, got {self.m!r}")
        if isinstance(self.ell, bool) or int(self.ell) != self.ell or self.ell < 1:
            raise ParameterError(f"ell must be a positive integer, got {self.ell!r}")
        object.__setattr__(self, 'm', int(self.m))
        object.__setattr__(self, 'ell', int(self.ell))
        for name in ('gamma', 'mu', 'p'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.gamma < 0.0:
            raise ParameterError(f"gamma must be nonnegative, got {self.gamma}")
        if self.p <= 1.0:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        n_gamma = self.n_gamma
        if n_gamma <= 2.0:
            raise ParameterError(f"homogeneous dimension must exceed 2, got N_gamma={n_gamma}")
        if not 0.0 < self.mu < n_gamma:
            raise ParameterError(f"mu must lie in (0, N_gamma) = (0, {n_gamma:g}), got {self.mu}")

    @property
    def n_gamma(self) -> float:
        return self.m + (1.0 + self.gamma) * self.ell

    @property
    def dimension(self) -> int:
        return self.m + self.ell

    def replace(self, **changes) -> 'ProblemParams':
        values = {'m': self.m, 'ell': self.ell, 'gamma': self.gamma, 'mu': self.mu, 'p': self.p}
        values.update(changes)
        return ProblemParams(**values)

    def to_dict(self) -> dict:
        return {'m': self.m, 'ell': self.ell, 'gamma': self.gamma, 'mu': self.mu, 'p': self.p}


@dataclass(frozen=True)
class SplitPoint:
    """A point z = (x, y) of R^m x R^ell"""

    x: Tuple[float, ...]
    y: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'x', tuple(float(v) for v in np.atleast_1d(self.x)))
        object.__setattr__(self, 'y', tuple(float(v) for v in np.atleast_1d(self.y)))

    def check(self, params: ProblemParams) -> None:
        if len(self.x) != params.m or len(self.y) != params.ell:
            raise ParameterError(
                f"dimension mismatch: point has ({len(self.x)}, {len(self.y)}), "
                f"params expect (m={params.m}, ell={params.ell})"
            )


@dataclass(frozen=True)
class ExponentData:
    n_gamma: float
    two_star: float
    p_lo: float
    p_hi: float
    c_A: float
    c_B: float


@dataclass(frozen=True)
class RegimeReport:
    """Where p sits relative to the existence window"""

    admissible: bool
    nonexistent: bool
    regularity_applicable: bool
    hormander_integer_gamma: bool
    interval: Tuple[float, float]
    c_A: float
    c_B: float
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def label(self) -> str:
        return 'admissible' if self.admissible else 'nonexistent regime'


# === DIMENSIONS AND EXPONENTS ===

def homogeneous_dimension(params: ProblemParams) -> float:
    return params.m + (1.0 + params.gamma) * params.ell


def critical_exponent(params: ProblemParams) -> float:
    """Critical Sobolev-Grushin exponent 2N_gamma/(N_gamma - 2)"""
    n_gamma = homogeneous_dimension(params)
    return 2.0 * n_gamma / (n_gamma - 2.0)


def choquard_lebesgue_exponent(params: ProblemParams) -> float:
    """q = 2pN_gamma/(2N_gamma - mu): the space on which the Choquard term is controlled"""
    n_gamma = homogeneous_dimension(params)
    return 2.0 * params.p * n_gamma / (2.0 * n_gamma - params.mu)


def admissible_p_interval(params: ProblemParams) -> Tuple[float, float]:
    """Open window ((2N-mu)/N, (2N-mu)/(N-2)) of exponents with a ground state"""
    n_gamma = homogeneous_dimension(params)
    top = 2.0 * n_gamma - params.mu
    return top / n_gamma, top / (n_gamma - 2.0)


def _pohozaev_numerators(params: ProblemParams) -> Tuple[float, float]:
    # c_A = (N p - (2N - mu)) / 2p and c_B = ((2N - mu) - (N - 2) p) / 2p; numerators
    # within rounding of zero are exact endpoint hits
    n_gamma = homogeneous_dimension(params)
    top = 2.0 * n_gamma - params.mu
    num_a = n_gamma * params.p - top
    num_b = top - (n_gamma - 2.0) * params.p
    if abs(num_a) <= _ENDPOINT_SLACK * max(abs(n_gamma * params.p), abs(top)):
        num_a = 0.0
    if abs(num_b) <= _ENDPOINT_SLACK * max(abs((n_gamma - 2.0) * params.p), abs(top)):
        num_b = 0.0
    return num_a, num_b


def pohozaev_coefficients(params: ProblemParams) -> Tuple[float, float]:
    """
    Ratios (c_A, c_B) with A = c_A D and B = c_B D for any solution.

    Combines the Pohozaev identity with the Nehari identity A + B = D; both are
    positive exactly on the open admissible interval and c_A + c_B = 1.
    """
    num_a, num_b = _pohozaev_numerators(params)
    return num_a / (2.0 * params.p), num_b / (2.0 * params.p)


def is_admissible(params: ProblemParams) -> bool:
    num_a, num_b = _pohozaev_numerators(params)
    return num_a > 0.0 and num_b > 0.0


def exponent_data(params: ProblemParams) -> ExponentData:
    p_lo, p_hi = admissible_p_interval(params)
    c_a, c_b = pohozaev_coefficients(params)
    return ExponentData(
        n_gamma=homogeneous_dimension(params),
        two_star=critical_exponent(params),
        p_lo=p_lo,
        p_hi=p_hi,
        c_A=c_a,
        c_B=c_b,
    )


def classify_regime(params: ProblemParams) -> RegimeReport:
    """Existence window, nonexistence complement (endpoints included), regularity flag"""
    c_a, c_b = pohozaev_coefficients(params)
    admissible = is_admissible(params)
    regularity = admissible and params.mu < REGULARITY_MU_MAX
    notes = []
    if not admissible:
        notes.append('nonexistent regime: min(c_A, c_B) <= 0')
    if params.mu >= REGULARITY_MU_MAX:
        notes.append('regularity theorem not applicable (mu >= 4)')
    integer_gamma = float(params.gamma).is_integer()
    if not integer_gamma:
        notes.append('non-integer gamma: finite-rank bracket condition not available')
    return RegimeReport(
        admissible=admissible,
        nonexistent=not admissible,
        regularity_applicable=regularity,
        hormander_integer_gamma=integer_gamma,
        interval=admissible_p_interval(params),
        c_A=c_a,
        c_B=c_b,
        notes=tuple(notes),
    )


# === POINT GEOMETRY ===

def grushin_distance(z: SplitPoint, params: ProblemParams) -> float:
    """d(z) = (|x|^{2(gamma+1)} + |y|^2)^{1/(2(gamma+1))}"""
    z.check(params)
    g1 = params.gamma + 1.0
    x_norm = math.sqrt(math.fsum(v * v for v in z.x))
    y_sq = math.fsum(v * v for v in z.y)
    base = x_norm ** (2.0 * g1) + y_sq
    if base == 0.0:
        return 0.0
    return base ** (1.0 / (2.0 * g1))


def anisotropic_dilation(z: SplitPoint, t: float, params: ProblemParams) -> SplitPoint:
    """delta_t(x, y) = (t x, t^{gamma+1} y)"""
    z.check(params)
    if not t > 0.0:
        raise ParameterError(f"dilation factor must be positive, got {t}")
    ty = t ** (params.gamma + 1.0)
    return SplitPoint(tuple(t * v for v in z.x), tuple(ty * v for v in z.y))


def grushin_gradient(grad_x: Sequence[float], grad_y: Sequence[float], x: Sequence[float],
                     params: ProblemParams) -> np.ndarray:
    """(grad_x u, |x|^gamma grad_y u) at a point with x-block `x`"""
    grad_x = np.asarray(grad_x, dtype=float).ravel()
    grad_y = np.asarray(grad_y, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if grad_x.size != params.m or x.size != params.m or grad_y.size != params.ell:
        raise ParameterError("dimension mismatch in grushin_gradient")
    weight = float(np.linalg.norm(x)) ** params.gamma if params.gamma > 0.0 else 1.0
    return np.concatenate([grad_x, weight * grad_y])
