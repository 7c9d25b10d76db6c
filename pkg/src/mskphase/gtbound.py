"""Two-replica 1-RSB upper bound for the coupled constrained free energy.

The bound U(c, c'; q1, q2; m, b) couples two replicas at overlap
u = c*q1 + c'*(q2 - q1) through correlated outer Gaussians (correlation c per
species) and correlated inner Gaussians (correlation c'), with an exponent
m in [0, 1] and per-species Lagrange parameters b.  The inner expectation is
taken over the inner pair with the outer pair and the field held fixed.

The hyperbolic product cosh(Y1)cosh(Y2)cosh(b) + sinh(Y1)sinh(Y2)sinh(b)
equals (e^b cosh(Y1+Y2) + e^{-b} cosh(Y1-Y2))/2, and the sum/difference
combinations of equal-variance correlated Gaussians are independent, so every
species reduces to a four-axis tensor quadrature (outer sum/difference, inner
sum/difference) regardless of the correlation values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fixedpoint import solve_qstar
from .gauss import QuadratureSpec, gauss_hermite_table, log_cosh, sech
from .model import SpeciesSystem, bilinear_B
from .rs_at import rs_value

_ORDER_TOL = 1e-12
_LOG2 = math.log(2.0)


class Branch(enum.Enum):
    UPPER = "upper"  # interaction-weighted overlap at or above q*
    LOWER = "lower"  # interaction-weighted overlap at or below q*


@dataclass(frozen=True)
class GTParams:
    c: np.ndarray
    c_prime: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    m: float
    b: np.ndarray

    def __post_init__(self):
        for name in ("c", "c_prime", "q1", "q2", "b"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not 0.0 <= self.m <= 1.0:
            raise ValueError(f"m must lie in [0, 1], got {self.m}")
        if np.any(np.abs(self.c) > 1 + 1e-12) or np.any(np.abs(self.c_prime) > 1 + 1e-12):
            raise ValueError("replica correlations must lie in [-1, 1]")
        if np.any(self.q1 < -1e-12) or np.any(self.q1 > 1 + 1e-12):
            raise ValueError("q1 must lie in [0, 1]")
        if np.any(self.q2 < -1e-12) or np.any(self.q2 > 1 + 1e-12):
            raise ValueError("q2 must lie in [0, 1]")
        if np.any(np.abs(self.coupled_overlap()) > 1 + 1e-12):
            raise ValueError("coupled overlap c*q1 + c'*(q2-q1) must lie in [-1, 1]")

    def coupled_overlap(self) -> np.ndarray:
        return self.c * self.q1 + self.c_prime * (self.q2 - self.q1)


def _check_ordering(sys: SpeciesSystem, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    gap = sys.interaction() @ (q2 - q1)
    if np.any(gap < -_ORDER_TOL):
        raise ValueError("ordering constraint violated: Delta^2 Lambda q1 must be <= Delta^2 Lambda q2")
    return np.clip(gap, 0.0, None)


def _axis(scale: float, spec: QuadratureSpec):
    if scale == 0.0:
        return np.zeros(1), np.ones(1)
    x, w = gauss_hermite_table(spec.nodes)
    return scale * x, w


def _species_log_term(
    sigma_sum_outer: float,
    sigma_diff_outer: float,
    sigma_sum_inner: float,
    sigma_diff_inner: float,
    m: float,
    b: float,
    spec: QuadratureSpec,
) -> float:
    """E_outer of (1/m) log E_inner[g^m] with
    g = (e^b cosh(S) + e^{-b} cosh(D)) / 2, S/D the total sum/difference."""
    so, wso = _axis(sigma_sum_outer, spec)
    do, wdo = _axis(sigma_diff_outer, spec)
    si, wsi = _axis(sigma_sum_inner, spec)
    di, wdi = _axis(sigma_diff_inner, spec)
    S = so[:, None, None, None] + si[None, None, :, None]
    D = do[None, :, None, None] + di[None, None, None, :]
    log_g = np.logaddexp(b + log_cosh(S), -b + log_cosh(D)) - _LOG2
    w_inner = wsi[:, None] * wdi[None, :]
    if m == 0.0:
        inner = np.sum(log_g * w_inner[None, None, :, :], axis=(2, 3))
    else:
        scaled = m * log_g
        peak = np.max(scaled, axis=(2, 3), keepdims=True)
        inner = np.sum(np.exp(scaled - peak) * w_inner[None, None, :, :], axis=(2, 3))
        inner = (peak[:, :, 0, 0] + np.log(inner)) / m
    return float(wso @ inner @ wdo)


def gt_upper_bound(sys: SpeciesSystem, p: GTParams, spec: QuadratureSpec) -> float:
    """Limiting value of the coupled two-replica upper bound at the given
    parameter block (species ratios at their limits, vanishing corrections
    dropped).  m = 0 uses the analytic limit of the m-th moment average."""
    for arr in (p.c, p.c_prime, p.q1, p.q2, p.b):
        if arr.size != sys.species_count:
            raise ValueError("parameter length does not match species count")
    gap = _check_ordering(sys, p.q1, p.q2)
    u = p.coupled_overlap()
    base = 2.0 * (sys.interaction() @ p.q1)
    base = np.clip(base, 0.0, None)
    gap2 = 2.0 * gap

    value = 2.0 * _LOG2 + bilinear_B(sys, 1.0 - p.q2)
    value -= p.m * (
        bilinear_B(sys, p.q2) - bilinear_B(sys, p.q1) + bilinear_B(sys, u) - bilinear_B(sys, p.c * p.q1)
    )
    value -= float(sys.lam @ (p.b * u))
    for s in range(sys.species_count):
        # Y_j = z_j a + z'_j g + h with a^2 = 2(D2 L q1), g^2 = 2(D2 L (q2-q1)):
        # Var(Y1 + Y2) = 2a^2(1+c) + 2g^2(1+c') + 4 tau^2, Var(Y1 - Y2) likewise
        # with 1-c, 1-c' and no field.
        sum_outer = math.sqrt(2.0 * base[s] * (1.0 + p.c[s]) + 4.0 * sys.tau2[s])
        diff_outer = math.sqrt(max(0.0, 2.0 * base[s] * (1.0 - p.c[s])))
        sum_inner = math.sqrt(max(0.0, 2.0 * gap2[s] * (1.0 + p.c_prime[s])))
        diff_inner = math.sqrt(max(0.0, 2.0 * gap2[s] * (1.0 - p.c_prime[s])))
        value += sys.lam[s] * _species_log_term(
            sum_outer, diff_outer, sum_inner, diff_inner, p.m, float(p.b[s]), spec
        )
    return value


def _upper_branch_field(sys, q_star, v, spec):
    """Per-species (E' tanh^2 Y cosh Y / E' cosh Y and sech^3 variant) for
    Y = h + z a + z' g, a^2 = 2(D2 L q*), g^2 = 2(D2 L (v - q*))."""
    a2 = np.clip(2.0 * (sys.interaction() @ q_star), 0.0, None)
    g2 = np.clip(2.0 * (sys.interaction() @ (v - q_star)), 0.0, None)
    tanh_term = np.empty(sys.species_count)
    sech_term = np.empty(sys.species_count)
    for s in range(sys.species_count):
        outer_sd = math.sqrt(a2[s] + sys.tau2[s])
        zo, wo = _axis(outer_sd, spec)
        zi, wi = _axis(math.sqrt(g2[s]), spec)
        Y = zo[:, None] + zi[None, :]
        cosh_y = np.cosh(Y)
        denom = cosh_y @ wi
        tanh_term[s] = float(wo @ ((np.square(np.tanh(Y)) * cosh_y) @ wi / denom))
        sech_term[s] = float(wo @ ((np.power(sech(Y), 3)) @ wi / denom))
    return tanh_term, sech_term


def _lower_branch_field(sys, q_star, v, spec):
    """Per-species E tanh(Y1) tanh(Y2) and E sech^2(Y1) sech^2(Y2) for
    Y_j = h + z a + z'_j g with independent inner draws,
    a^2 = 2(D2 L v), g^2 = 2(D2 L (q* - v))."""
    a2 = np.clip(2.0 * (sys.interaction() @ v), 0.0, None)
    g2 = np.clip(2.0 * (sys.interaction() @ (q_star - v)), 0.0, None)
    tanh_term = np.empty(sys.species_count)
    sech_term = np.empty(sys.species_count)
    for s in range(sys.species_count):
        outer_sd = math.sqrt(a2[s] + sys.tau2[s])
        zo, wo = _axis(outer_sd, spec)
        zi, wi = _axis(math.sqrt(g2[s]), spec)
        Y = zo[:, None] + zi[None, :]
        t_inner = np.tanh(Y) @ wi
        s_inner = np.square(sech(Y)) @ wi
        tanh_term[s] = float(wo @ np.square(t_inner))
        sech_term[s] = float(wo @ np.square(s_inner))
    return tanh_term, sech_term


@dataclass(frozen=True)
class GradientReport:
    gradient: np.ndarray
    integral_check: np.ndarray
    gamma_hat: np.ndarray


def _composite_gauss_points(panels: int = 16):
    """Composite two-point Gauss rule on [0, 1] (32 evaluation points)."""
    offset = 0.5 / math.sqrt(3.0)
    edges = np.linspace(0.0, 1.0, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 / panels
    pts = np.concatenate([mids - 2 * half * offset, mids + 2 * half * offset])
    wts = np.full(pts.size, 1.0 / pts.size)
    return pts, wts


def gt_b_gradient_at_zero(
    sys: SpeciesSystem,
    u,
    branch: Branch,
    spec: QuadratureSpec,
    q_star: np.ndarray | None = None,
) -> GradientReport:
    """Gradient of the bound in the Lagrange parameters at b = 0, for the two
    specialized parameter choices, plus the independent integral
    representation (2 * int Gamma(u_t) dt * Lambda Delta^2 Lambda - Lambda)
    (u - q*) evaluated by composite quadrature along the segment."""
    u = np.asarray(u, dtype=float)
    if q_star is None:
        q_star = solve_qstar(sys, spec).q_star
    gap = sys.interaction() @ (u - q_star)
    if branch is Branch.UPPER:
        if np.any(gap < -1e-10):
            raise ValueError("upper branch requires Delta^2 Lambda (u - q*) >= 0")
        tanh_term, _ = _upper_branch_field(sys, q_star, u, spec)
        gamma_of = lambda v: _upper_branch_field(sys, q_star, v, spec)[1]
    else:
        if np.any(gap > 1e-10):
            raise ValueError("lower branch requires Delta^2 Lambda (u - q*) <= 0")
        tanh_term, _ = _lower_branch_field(sys, q_star, u, spec)
        gamma_of = lambda v: _lower_branch_field(sys, q_star, v, spec)[1]
    gradient = sys.lam * (tanh_term - u)

    ts, ws = _composite_gauss_points()
    gamma_hat = np.zeros(sys.species_count)
    for t, w in zip(ts, ws):
        gamma_hat += w * gamma_of(t * u + (1.0 - t) * q_star)
    check = (2.0 * gamma_hat[:, None] * sys.quadratic_kernel() - sys.lam_matrix) @ (u - q_star)
    return GradientReport(gradient=gradient, integral_check=check, gamma_hat=gamma_hat)


@dataclass(frozen=True)
class GTCostResult:
    bound: float
    cost: float
    branch: Branch
    b: np.ndarray
    twice_rs_star: float


def gt_cost_curve(
    sys: SpeciesSystem,
    u,
    spec: QuadratureSpec,
    q_star: np.ndarray | None = None,
) -> GTCostResult:
    """Free-energy cost 2*RS*(1) - bound at overlap u, with the Lagrange
    parameters set to the quadratic-model minimizer b = -Lambda^{-1} W(u) / 2.

    The branch (exponent 1/2 with fully correlated replicas above q*, the
    m -> 0 limit below) is selected from the sign of the interaction-weighted
    displacement; u must be on one side or the other."""
    u = np.asarray(u, dtype=float)
    if q_star is None:
        q_star = solve_qstar(sys, spec).q_star
    gap = sys.interaction() @ (u - q_star)
    if np.all(gap >= -1e-10):
        branch = Branch.UPPER
    elif np.all(gap <= 1e-10):
        branch = Branch.LOWER
    else:
        raise ValueError("u is not interaction-ordered relative to q*")
    grad = gt_b_gradient_at_zero(sys, u, branch, spec, q_star=q_star)
    b = -0.5 * grad.gradient / sys.lam
    ones = np.ones(sys.species_count)
    if branch is Branch.UPPER:
        params = GTParams(c=ones, c_prime=ones, q1=q_star, q2=u, m=0.5, b=b)
    else:
        params = GTParams(c=ones, c_prime=np.zeros_like(ones), q1=u, q2=q_star, m=0.0, b=b)
    bound = gt_upper_bound(sys, params, spec)
    twice_rs = 2.0 * rs_value(sys, q_star, spec)
    return GTCostResult(bound=bound, cost=twice_rs - bound, branch=branch, b=b, twice_rs_star=twice_rs)


def fit_cost_constant(sys: SpeciesSystem, points, spec: QuadratureSpec) -> float:
    """Smallest cost / B(u - q*) ratio over a family of admissible overlaps;
    positive values certify a quadratic free-energy cost on the family.  The
    constant is reported, never asserted against any theoretical value."""
    fp = solve_qstar(sys, spec)
    best = math.inf
    for u in points:
        u = np.asarray(u, dtype=float)
        denom = bilinear_B(sys, u - fp.q_star)
        if denom < 1e-12:
            continue
        res = gt_cost_curve(sys, u, spec, q_star=fp.q_star)
        best = min(best, res.cost / denom)
    return best
