"""Replica-symmetric functional, AT criterion, and the interpolation path.

RS(q) = log 2 + sum_s lambda_s E log cosh(z sqrt(tau_s^2 + 2(Delta^2 Lambda q)_s))
        + (1/2) (1-q)^T Lambda Delta^2 Lambda (1-q).

The AT verdict compares the spectral radius of Gamma Delta^2 Lambda with 1/2,
where Gamma is the diagonal matrix of E sech^4 at the effective field of the
maximal fixed point q*.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fixedpoint import FixedPointReport, fixed_point_map, solve_qstar
from .gauss import QuadratureSpec, expect_log_cosh, expect_sech4
from .model import SpeciesSystem, bilinear_B, spectral_radius, with_profile


class Phase(enum.Enum):
    RS = "RS"
    RSB = "RSB"


@dataclass(frozen=True)
class RSTerms:
    """Exact affine decomposition of the RS value (entropy + field + interaction)."""

    entropy: float
    field: float
    interaction: float

    @property
    def value(self) -> float:
        return self.entropy + self.field + self.interaction


def _effective_sigmas(sys: SpeciesSystem, q: np.ndarray) -> np.ndarray:
    return np.sqrt(sys.tau2 + 2.0 * (sys.interaction() @ q))


def rs_terms(sys: SpeciesSystem, q, spec: QuadratureSpec) -> RSTerms:
    q = np.asarray(q, dtype=float)
    if q.shape != (sys.species_count,):
        raise ValueError("overlap vector length does not match species count")
    field = float(sys.lam @ expect_log_cosh(_effective_sigmas(sys, q), spec))
    interaction = 0.5 * bilinear_B(sys, 1.0 - q)
    return RSTerms(entropy=math.log(2.0), field=field, interaction=interaction)


def rs_value(sys: SpeciesSystem, q, spec: QuadratureSpec) -> float:
    """Value of the replica-symmetric functional at overlap q."""
    return rs_terms(sys, q, spec).value


@dataclass(frozen=True)
class VectorFieldReport:
    direction: np.ndarray  # map(q) - q
    directional_derivative: float  # d/de RS(q + e*direction) at e=0+, equals -B(u,u)


def rs_vectorfield(sys: SpeciesSystem, q, spec: QuadratureSpec) -> VectorFieldReport:
    """Ascent-direction field u(q) = map(q) - q and the right derivative of RS
    along it, which is -B(u, u) by Gaussian integration by parts."""
    q = np.asarray(q, dtype=float)
    u = fixed_point_map(sys, q, spec) - q
    return VectorFieldReport(direction=u, directional_derivative=-bilinear_B(sys, u))


def gamma_diagonal(sys: SpeciesSystem, q_star, spec: QuadratureSpec) -> np.ndarray:
    """Diagonal of Gamma: per-species E sech^4 at the effective RS field."""
    return expect_sech4(_effective_sigmas(sys, np.asarray(q_star, dtype=float)), spec)


@dataclass(frozen=True)
class ATReport:
    q_star: np.ndarray
    gamma_diag: np.ndarray
    rho: float
    phase: Phase
    rs_min_value: float
    fixed_point: FixedPointReport


def gamma_and_at(
    sys: SpeciesSystem,
    spec: QuadratureSpec,
    fp: FixedPointReport | None = None,
    tol: float = 1e-11,
) -> ATReport:
    """AT classification at the maximal fixed point.

    The phase is a hard threshold on rho = spectral_radius(Gamma Delta^2 Lambda)
    at 1/2, with no tolerance band.  rs_min_value is RS evaluated at q*, which
    is a minimizer for irreducible positive-semidefinite interactions (for
    semidefinite non-definite ones the minimizer set is a coset of the kernel
    of Delta^2 Lambda; we report the value at q* and do not enumerate the set).
    """
    if fp is None:
        fp = solve_qstar(sys, spec, tol=tol)
    gamma = gamma_diagonal(sys, fp.q_star, spec)
    rho = spectral_radius(gamma[:, None] * sys.interaction())
    phase = Phase.RS if rho <= 0.5 else Phase.RSB
    return ATReport(
        q_star=fp.q_star,
        gamma_diag=gamma,
        rho=rho,
        phase=phase,
        rs_min_value=rs_value(sys, fp.q_star, spec),
        fixed_point=fp,
    )


@dataclass(frozen=True)
class InterpolatedProfile:
    t: float
    delta2_t: np.ndarray
    tau2_t: np.ndarray
    rs_star_t: float
    q_star: np.ndarray

    def system(self, base: SpeciesSystem) -> SpeciesSystem:
        return with_profile(base, self.delta2_t, self.tau2_t)


def interpolate_profile(
    sys: SpeciesSystem,
    t: float,
    spec: QuadratureSpec,
    fp: FixedPointReport | None = None,
) -> InterpolatedProfile:
    """Variance profile (t Delta^2, tau^2 + (1-t) 2 Delta^2 Lambda q*) along the
    interpolation, together with the minimum of the RS functional on it.

    The maximal fixed point is invariant along this path, so the minimum is
    affine in t with slope B(1-q*)/2.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if fp is None:
        fp = solve_qstar(sys, spec)
    q_star = fp.q_star
    delta2_t = t * sys.delta2
    tau2_t = sys.tau2 + (1.0 - t) * 2.0 * (sys.interaction() @ q_star)
    field = float(sys.lam @ expect_log_cosh(_effective_sigmas(sys, q_star), spec))
    rs_star = math.log(2.0) + field + 0.5 * t * bilinear_B(sys, 1.0 - q_star)
    return InterpolatedProfile(t=t, delta2_t=delta2_t, tau2_t=tau2_t, rs_star_t=rs_star, q_star=q_star)
