"""Overlap fixed-point map and the maximal fixed point.

The map sends p to E tanh^2(z * sqrt(tau^2 + 2 Delta^2 Lambda p)) entrywise.
It is monotone for the entrywise order, so iterating from the all-ones vector
gives a non-increasing sequence converging to the maximal fixed point q*, and
iterating from zero gives a non-decreasing sequence; comparing the two limits
classifies the fixed-point structure (unique interior point when the field is
nonzero, zero-only or zero-plus-interior at zero field depending on whether
the spectral radius of Delta^2 Lambda exceeds 1/2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gauss import QuadratureSpec, expect_tanh_sq
from .model import SpeciesSystem, spectral_radius

DEFAULT_TOL = 1e-11
MAX_ITERATIONS = 50_000
# Entrywise-monotonicity slack for floating-point rounding in the quadrature.
_MONOTONE_SLACK = 1e-13


class FixedPointKind(enum.Enum):
    UNIQUE_INTERIOR = "unique_interior"
    ZERO_ONLY = "zero_only"
    ZERO_AND_INTERIOR = "zero_and_interior"


@dataclass(frozen=True)
class FixedPointReport:
    q_star: np.ndarray
    q_min: np.ndarray
    iterations: int
    residual: float
    classification: FixedPointKind
    converged: bool
    rho_interaction: float


def fixed_point_map(sys: SpeciesSystem, p, spec: QuadratureSpec) -> np.ndarray:
    """One application of the overlap map, entrywise over species."""
    p = np.asarray(p, dtype=float)
    if p.shape != (sys.species_count,):
        raise ValueError("overlap vector length does not match species count")
    if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
        raise ValueError("overlap entries must lie in [0, 1]")
    var = sys.tau2 + 2.0 * (sys.interaction() @ np.clip(p, 0.0, 1.0))
    return expect_tanh_sq(np.sqrt(var), spec)


def _iterate(sys, start, spec, tol, max_iter, direction):
    """Monotone iteration; direction +1 asserts non-decreasing, -1 non-increasing."""
    q = np.array(start, dtype=float)
    step = np.inf
    for it in range(1, max_iter + 1):
        nxt = fixed_point_map(sys, q, spec)
        drift = direction * (nxt - q)
        if np.any(drift < -_MONOTONE_SLACK):
            raise RuntimeError("monotone iteration violated beyond rounding slack")
        # Clamp rounding-level violations so the sequence stays a chain.
        nxt = np.maximum(nxt, q) if direction > 0 else np.minimum(nxt, q)
        step = float(np.max(np.abs(nxt - q)))
        q = nxt
        if step < tol:
            return q, it, True
    return q, max_iter, False


def solve_qstar(
    sys: SpeciesSystem,
    spec: QuadratureSpec,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> FixedPointReport:
    """Maximal fixed point q* (from the ones vector), the minimal limit (from
    zero), and the structural classification.

    Requires an irreducible system.  Zero external field is detected exactly
    (all entries equal to 0): in the subcritical zero-field case the zero
    vector is the unique fixed point and is returned exactly rather than as a
    decayed iterate.  Non-convergence within the iteration cap is reported
    through the residual and converged flag, never raised.
    """
    if not sys.irreducible:
        raise ValueError("solve_qstar requires an irreducible interaction matrix")
    n = sys.species_count
    zero_field = bool(np.all(sys.tau2 == 0.0))
    rho_int = spectral_radius(sys.interaction())

    if zero_field and rho_int <= 0.5:
        q_star = np.zeros(n)
        residual = float(np.max(np.abs(fixed_point_map(sys, q_star, spec))))
        return FixedPointReport(
            q_star=q_star,
            q_min=np.zeros(n),
            iterations=0,
            residual=residual,
            classification=FixedPointKind.ZERO_ONLY,
            converged=True,
            rho_interaction=rho_int,
        )

    q_hi, it_hi, ok_hi = _iterate(sys, np.ones(n), spec, tol, max_iter, direction=-1)
    if zero_field:
        q_lo, it_lo, ok_lo = np.zeros(n), 0, True
        classification = FixedPointKind.ZERO_AND_INTERIOR
    else:
        q_lo, it_lo, ok_lo = _iterate(sys, np.zeros(n), spec, tol, max_iter, direction=+1)
        classification = FixedPointKind.UNIQUE_INTERIOR

    residual = float(np.max(np.abs(fixed_point_map(sys, q_hi, spec) - q_hi)))
    return FixedPointReport(
        q_star=q_hi,
        q_min=q_lo,
        iterations=it_hi + it_lo,
        residual=residual,
        classification=classification,
        converged=ok_hi and ok_lo,
        rho_interaction=rho_int,
    )


@dataclass(frozen=True)
class RegionReport:
    values: np.ndarray
    in_monotone_below: bool  # all component signs >= 0 (region below q*)
    in_monotone_above: bool  # all component signs <= 0 and q != 0 (region above q*)


def region_signs(sys: SpeciesSystem, q, spec: QuadratureSpec, tol: float = 0.0) -> RegionReport:
    """Per-species values of the vector field map(q) - q and membership flags
    for the two totally ordered sign regions."""
    q = np.asarray(q, dtype=float)
    g = fixed_point_map(sys, q, spec) - q
    below = bool(np.all(g >= -tol))
    above = bool(np.all(g <= tol) and np.any(q != 0.0))
    return RegionReport(values=g, in_monotone_below=below, in_monotone_above=above)
