"""
Identity and inequality audits for computed fields

Every audit is read-only: it evaluates scalars of a field and never touches its
values. Scalars that only make sense for solutions (Pohozaev, ratios) are still
reported for arbitrary fields.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .geometry import ProblemParams, choquard_lebesgue_exponent, pohozaev_coefficients
from .grid_ops import (
    RadialField,
    bilinear_sampler,
    build_grid,
    dilate_field,
    gaussian_bump,
    lebesgue_norm,
    sphere_area,
)
from .nonlocal_ops import (
    KernelMatrix,
    angular_rule,
    build_kernel,
    choquard_potential,
    choquard_term,
    kernel_values,
)
from .performance import perf_monitor
from .variational import EnergyBreakdown, energy
from ..utils.constants import (
    HLS_T_VALUES,
    HOLDER_EXPONENT,
    NEAR_FIELD_RADIUS,
    RESOLUTION_CELLS,
    RESOLUTION_TOL,
    SUPPORT_TOL,
    TAIL_FRACTION,
    TAIL_MASS_FLAG,
)
from ..utils.errors import DegenerateFieldError, ParameterError, SupportViolationError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps

DEFAULT_THRESHOLDS = {
    'pohozaev_rel': 5e-2,
    'nehari_rel': 1e-10,
    'ratio_A_err': 5e-2,
    'ratio_B_err': 5e-2,
    'hls_ratio_spread': 1e-3,
    'k_oracle_err': 1e-3,
    'tail_mass_fraction': TAIL_MASS_FLAG,
}


@dataclass(frozen=True)
class RatioReport:
    A_over_D: float
    B_over_D: float
    c_A: float
    c_B: float
    err_A: float
    err_B: float


@dataclass(frozen=True)
class HLSAudit:
    spread: float
    t_values: Tuple[float, ...]
    ratios: Tuple[float, ...]
    d_scaling_err: float
    mass_scaling_err: float
    d_exponent_fit: float
    mode: str


@dataclass(frozen=True)
class RegularityReport:
    sup_norm: float
    tail_mass_fraction: float
    monotone_tail: bool


@dataclass(frozen=True)
class AuditReport:
    pohozaev_abs: float
    pohozaev_rel: float
    nehari_abs: float
    nehari_rel: float
    ratio_A_err: float
    ratio_B_err: float
    hls_ratio_spread: float
    k_sup: float
    k_oracle_err: float
    sup_norm: float
    tail_mass_fraction: float
    monotone_tail: bool = True
    holder_modulus: float = 0.0
    hls_subject: str = 'field'
    tail_flag: bool = False
    degenerate: bool = False
    extras: Dict[str, float] = field(default_factory=dict)

    def passes(self, thresholds: Optional[Dict[str, float]] = None) -> Dict[str, bool]:
        limits = dict(DEFAULT_THRESHOLDS)
        limits.update(thresholds or {})
        return {name: bool(getattr(self, name) <= limit) for name, limit in limits.items()}

    @property
    def hls_spread_ok(self) -> bool:
        return self.hls_ratio_spread <= DEFAULT_THRESHOLDS['hls_ratio_spread']

    def to_dict(self) -> dict:
        out = asdict(self)
        out['hls_spread_ok'] = self.hls_spread_ok
        return out


def _relative(value: float, reference: float, scale: float) -> float:
    if value == 0.0:
        return 0.0
    return abs(value) / max(reference, _EPS * scale)


# === IDENTITIES ===

def pohozaev_value(b: EnergyBreakdown, params: ProblemParams) -> Tuple[float, float]:
    """P(u) = (N-2)/2 A + N/2 B - (2N-mu)/(2p) D and the scale of its terms"""
    n_gamma = params.n_gamma
    terms = (
        0.5 * (n_gamma - 2.0) * b.A,
        0.5 * n_gamma * b.B,
        (2.0 * n_gamma - params.mu) / (2.0 * params.p) * b.D,
    )
    return terms[0] + terms[1] - terms[2], max(abs(t) for t in terms)


def pohozaev_residual(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                      breakdown: Optional[EnergyBreakdown] = None) -> Tuple[float, float]:
    b = breakdown if breakdown is not None else energy(u, kernel, params)
    value, scale = pohozaev_value(b, params)
    return value, _relative(value, b.D, scale)


def nehari_residual(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                    breakdown: Optional[EnergyBreakdown] = None) -> Tuple[float, float]:
    """|u|_gamma^2 - D(u), absolute and relative to D"""
    b = breakdown if breakdown is not None else energy(u, kernel, params)
    value = b.norm_sq - b.D
    return value, _relative(value, b.D, max(b.norm_sq, b.D))


def ratio_decomposition(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                        breakdown: Optional[EnergyBreakdown] = None) -> RatioReport:
    b = breakdown if breakdown is not None else energy(u, kernel, params)
    if b.D <= 0.0:
        raise DegenerateFieldError("degenerate field: D(u) = 0, ratios undefined")
    c_a, c_b = pohozaev_coefficients(params)
    a_d, b_d = b.A / b.D, b.B / b.D
    return RatioReport(a_d, b_d, c_a, c_b, abs(a_d - c_a), abs(b_d - c_b))


# === HLS SCALING ===

def _check_support(u: RadialField, t: float, params: ProblemParams, q: float) -> None:
    """Interpolated dilates must stay in the box (t > 1) and stay resolved (t < 1)"""
    if t == 1.0:
        return
    grid = u.grid
    rr, ss = grid.mesh()
    mass = grid.w * np.abs(u.values) ** q
    total = float(mass.sum())
    if total == 0.0:
        return
    g1 = 1.0 + params.gamma
    if t > 1.0:
        lost = (rr > grid.R / t) | (ss > grid.S / t ** g1)
        frac = float(mass[lost].sum()) / total
        if frac > SUPPORT_TOL:
            raise SupportViolationError(
                f"support violation: dilation by t={t:g} moves {frac:.2e} of the L^q mass outside the box"
            )
        return
    # what lands in the first RESOLUTION_CELLS cells of each axis after shrinking
    squeezed = (rr < RESOLUTION_CELLS * grid.dr / t) & (ss < RESOLUTION_CELLS * grid.ds / t ** g1)
    frac = float(mass[squeezed].sum()) / total
    if frac > RESOLUTION_TOL:
        raise SupportViolationError(
            f"support violation: dilation by t={t:g} squeezes {frac:.2f} of the L^q mass into "
            f"{RESOLUTION_CELLS}x{RESOLUTION_CELLS} cells; use mode='regrid' or a finer grid"
        )


def hls_scaling_audit(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                      t_values: Sequence[float] = HLS_T_VALUES,
                      mode: str = 'regrid') -> HLSAudit:
    """
    Spread over t of D(u_t) / |u_t|_q^{2p} for u_t = u o delta_{1/t}.

    mode='regrid' samples u exactly on the dilated grid delta_t(grid) with a freshly
    assembled kernel there, so only the kernel's homogeneity is measured.
    mode='interpolate' resamples u_t on the same grid (bilinear) and raises
    SupportViolationError when a dilate leaves the box or collapses onto a few cells.
    """
    if mode not in ('interpolate', 'regrid'):
        raise ParameterError(f"unknown HLS audit mode {mode!r}")
    t_values = tuple(float(t) for t in t_values)
    if not t_values or min(t_values) <= 0.0:
        raise ParameterError("t_values must be a nonempty list of positive reals")
    if u.is_zero():
        raise DegenerateFieldError("degenerate field: HLS ratio of the zero field")
    n_gamma, q, p = params.n_gamma, choquard_lebesgue_exponent(params), params.p
    grid = u.grid
    base_D = choquard_term(kernel, u, params)
    base_mass = lebesgue_norm(u, q) ** q

    ratios, d_values = [], []
    d_err = mass_err = 0.0
    for t in t_values:
        if mode == 'interpolate':
            _check_support(u, t, params, q)
            v = dilate_field(u, t, params)
            k_t = kernel
        elif t == 1.0:
            v, k_t = u, kernel
        else:
            g_t = build_grid(grid.nr, grid.ns, t * grid.R, t ** (1.0 + params.gamma) * grid.S, params)
            v = RadialField(g_t, u.values)
            # same size as the kernel already in memory
            k_t = build_kernel(g_t, params, kernel.n_theta, matrix_free=kernel.matrix_free,
                               memory_cap_mb=math.inf, row_block=kernel.row_block)
        D_t = choquard_term(k_t, v, params)
        mass_t = lebesgue_norm(v, q) ** q
        ratios.append(D_t / mass_t ** (2.0 * p / q))
        d_values.append(D_t)
        d_err = max(d_err, abs(D_t / (t ** (2.0 * n_gamma - params.mu) * base_D) - 1.0))
        mass_err = max(mass_err, abs(mass_t / (t ** n_gamma * base_mass) - 1.0))

    spread = (max(ratios) - min(ratios)) / min(ratios)
    distinct = sorted(set(t_values))
    if len(distinct) >= 2:
        slope = np.polyfit(np.log(t_values), np.log(d_values), 1)[0]
    else:
        slope = math.nan
    return HLSAudit(float(spread), t_values, tuple(ratios), float(d_err), float(mass_err),
                    float(slope), mode)


# === K BOUNDEDNESS ===

def _reconstruct(u: RadialField, params: ProblemParams, reconstruction: str):
    """|u|^p as a function of (r, s) arrays"""
    grid = u.grid
    if reconstruction == 'cell':
        f = np.abs(u.values) ** params.p

        def values(rr, ss):
            i = np.clip((rr / grid.dr).astype(int), 0, grid.nr - 1)
            j = np.clip((ss / grid.ds).astype(int), 0, grid.ns - 1)
            return f[i, j]
        return values
    if reconstruction == 'bilinear':
        sampler = bilinear_sampler(u)

        def values(rr, ss):
            pts = np.stack([rr.ravel(), ss.ravel()], axis=-1)
            return np.abs(sampler(pts)).reshape(rr.shape) ** params.p
        return values
    raise ParameterError(f"reconstruction must be 'cell' or 'bilinear', got {reconstruction!r}")


def _quadrature_sum(r0, s0, r_f, s_f, wf, rules, params: ProblemParams) -> float:
    total = 0.0
    for i in range(r_f.size):
        k = kernel_values(r0, s0, r_f[i], s_f, *rules, params.gamma, params.mu)
        total += float(np.dot(k, wf[i]))
    return total


def direct_potential(u: RadialField, params: ProblemParams, points: Sequence[Tuple[float, float]],
                     refine: int = 4, n_theta: int = 64, reconstruction: str = 'cell') -> np.ndarray:
    """
    K = d^{-mu} * |u|^p at arbitrary (r, s) points by fine two-dimensional quadrature.

    'cell' holds |u|^p constant on each grid cell; 'bilinear' raises the bilinear
    interpolant of u to the power p. Every cell is split `refine` ways per axis, and
    the cells within NEAR_FIELD_RADIUS of a point four times finer again with a
    doubled angular order. An even `refine` keeps fine midpoints off coarse nodes.
    """
    grid = u.grid
    values = _reconstruct(u, params, reconstruction)
    sigma = sphere_area(params.m) * sphere_area(params.ell)

    def weights(r_f, s_f, fdr, fds):
        rr, ss = np.meshgrid(r_f, s_f, indexing='ij')
        return sigma * np.outer(r_f ** (params.m - 1), s_f ** (params.ell - 1)) * fdr * fds * values(rr, ss)

    fdr, fds = grid.dr / refine, grid.ds / refine
    r_f = (np.arange(grid.nr * refine) + 0.5) * fdr
    s_f = (np.arange(grid.ns * refine) + 0.5) * fds
    wf = weights(r_f, s_f, fdr, fds)
    far_rules = (angular_rule(params.m, n_theta), angular_rule(params.ell, n_theta))
    near_rules = (angular_rule(params.m, 2 * n_theta), angular_rule(params.ell, 2 * n_theta))
    q, fine = NEAR_FIELD_RADIUS, 4 * refine

    out = np.empty(len(points))
    for n, (r0, s0) in enumerate(points):
        i0 = min(int(r0 / grid.dr), grid.nr - 1)
        j0 = min(int(s0 / grid.ds), grid.ns - 1)
        i_lo, i_hi = max(0, i0 - q), min(grid.nr, i0 + q + 1)
        j_lo, j_hi = max(0, j0 - q), min(grid.ns, j0 + q + 1)
        far = wf.copy()
        far[i_lo * refine:i_hi * refine, j_lo * refine:j_hi * refine] = 0.0
        total = _quadrature_sum(r0, s0, r_f, s_f, far, far_rules, params)

        ndr, nds = grid.dr / fine, grid.ds / fine
        r_n = i_lo * grid.dr + (np.arange((i_hi - i_lo) * fine) + 0.5) * ndr
        s_n = j_lo * grid.ds + (np.arange((j_hi - j_lo) * fine) + 0.5) * nds
        total += _quadrature_sum(r0, s0, r_n, s_n, weights(r_n, s_n, ndr, nds), near_rules, params)
        out[n] = total
    return out


def k_boundedness_audit(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
                        n_samples: int = 5, seed: int = 0, refine: int = 4,
                        n_theta_oracle: Optional[int] = None) -> Tuple[float, float]:
    """(max K over the grid, max relative deviation from direct quadrature at sampled nodes)"""
    K = choquard_potential(kernel, u, params)
    k_sup = float(np.max(K.values))
    if u.is_zero() or n_samples <= 0:
        return k_sup, 0.0
    grid = u.grid
    rng = np.random.default_rng(seed)
    picks = rng.choice(grid.size, size=min(n_samples, grid.size), replace=False)
    idx = np.unravel_index(picks, grid.shape)
    points = list(zip(grid.r_nodes[idx[0]], grid.s_nodes[idx[1]]))
    oracle = direct_potential(u, params, points, refine=refine,
                              n_theta=n_theta_oracle or 2 * kernel.n_theta)
    computed = K.values[idx]
    err = np.abs(computed - oracle) / np.maximum(np.abs(oracle), np.finfo(float).tiny)
    return k_sup, float(np.max(err))


# === REGULARITY STAND-INS ===

def regularity_sanity(u: RadialField) -> RegularityReport:
    grid = u.grid
    values = u.values
    sup_norm = float(np.max(np.abs(values)))
    rr, ss = grid.mesh()
    mass = grid.w * values ** 2
    total = float(mass.sum())
    tail = (rr > TAIL_FRACTION * grid.R) | (ss > TAIL_FRACTION * grid.S)
    tail_fraction = float(mass[tail].sum()) / total if total > 0.0 else 0.0
    prof_r = np.max(np.abs(values), axis=1)[grid.r_nodes > TAIL_FRACTION * grid.R]
    prof_s = np.max(np.abs(values), axis=0)[grid.s_nodes > TAIL_FRACTION * grid.S]
    monotone = bool(np.all(np.diff(prof_r) <= 0.0) and np.all(np.diff(prof_s) <= 0.0))
    return RegularityReport(sup_norm, tail_fraction, monotone)


def holder_modulus(u: RadialField, exponent: float = HOLDER_EXPONENT) -> float:
    """max |u(a) - u(b)| / |a - b|^exponent over grid neighbours (informational)"""
    grid, values = u.grid, u.values
    dr_part = np.abs(np.diff(values, axis=0)) / grid.dr ** exponent
    ds_part = np.abs(np.diff(values, axis=1)) / grid.ds ** exponent
    return float(max(dr_part.max(initial=0.0), ds_part.max(initial=0.0)))


def reference_bump(u: RadialField, params: ProblemParams, t_values: Sequence[float]) -> RadialField:
    """Anisotropic Gaussian narrow enough that every dilate in t_values stays in the box"""
    grid = u.grid
    t_max = max(max(t_values), 1.0)
    g1 = 1.0 + params.gamma
    width = min(grid.R / t_max, grid.S / (g1 * t_max ** g1)) / 4.5
    return gaussian_bump(grid, params, width=width)


# === FULL AUDIT ===

@perf_monitor.time_it
def audit(u: RadialField, kernel: KernelMatrix, params: ProblemParams,
          t_values: Sequence[float] = HLS_T_VALUES, n_samples: int = 5,
          seed: int = 0) -> AuditReport:
    b = energy(u, kernel, params)
    p_abs, p_rel = pohozaev_residual(u, kernel, params, b)
    n_abs, n_rel = nehari_residual(u, kernel, params, b)
    degenerate = b.D <= 0.0
    if degenerate:
        err_a = err_b = 0.0
    else:
        ratios = ratio_decomposition(u, kernel, params, b)
        err_a, err_b = ratios.err_A, ratios.err_B

    subject = 'field'
    try:
        hls = hls_scaling_audit(u, kernel, params, t_values)
    except (SupportViolationError, DegenerateFieldError) as e:
        logger.info("HLS audit on reference bump instead of the field: %s", e)
        subject = 'reference_bump'
        hls = hls_scaling_audit(reference_bump(u, params, t_values), kernel, params, t_values)

    k_sup, k_err = k_boundedness_audit(u, kernel, params, n_samples=n_samples, seed=seed)
    reg = regularity_sanity(u)
    tail_flag = reg.tail_mass_fraction > TAIL_MASS_FLAG
    if tail_flag:
        logger.warning("tail mass fraction %.2e exceeds %.0e; enlarge R, S",
                       reg.tail_mass_fraction, TAIL_MASS_FLAG)
    return AuditReport(
        pohozaev_abs=p_abs,
        pohozaev_rel=p_rel,
        nehari_abs=n_abs,
        nehari_rel=n_rel,
        ratio_A_err=err_a,
        ratio_B_err=err_b,
        hls_ratio_spread=hls.spread,
        k_sup=k_sup,
        k_oracle_err=k_err,
        sup_norm=reg.sup_norm,
        tail_mass_fraction=reg.tail_mass_fraction,
        monotone_tail=reg.monotone_tail,
        holder_modulus=holder_modulus(u),
        hls_subject=subject,
        tail_flag=tail_flag,
        degenerate=degenerate,
        extras=_hls_extras(hls),
    )


def _hls_extras(hls: HLSAudit) -> Dict[str, float]:
    out = {'d_scaling_err': hls.d_scaling_err, 'mass_scaling_err': hls.mass_scaling_err}
    if math.isfinite(hls.d_exponent_fit):
        out['d_exponent_fit'] = hls.d_exponent_fit
    return out
