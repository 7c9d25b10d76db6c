"""Multi-species model parameters and matrix utilities.

A model is a triple (lambda, Delta^2, tau^2): species ratios, a symmetric
nonnegative matrix of pair-interaction variances, and per-species external
field variances.  Validation never repairs data; it records structural flags
(irreducibility of the interaction graph, positive-semidefiniteness) that
downstream solvers require.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA_SUM_TOL = 1e-12
SYMMETRY_RTOL = 1e-14
PSD_RTOL = 1e-10


@dataclass(frozen=True)
class SpeciesSystem:
    """Validated model parameters. Immutable; construct via validate_system."""

    lam: np.ndarray
    delta2: np.ndarray
    tau2: np.ndarray
    irreducible: bool
    psd: bool

    @property
    def species_count(self) -> int:
        return self.lam.size

    @property
    def lam_matrix(self) -> np.ndarray:
        """Diagonal matrix of species ratios."""
        return np.diag(self.lam)

    def interaction(self) -> np.ndarray:
        """Delta^2 @ Lambda, the matrix driving the fixed-point map."""
        return self.delta2 * self.lam[None, :]

    def quadratic_kernel(self) -> np.ndarray:
        """Lambda @ Delta^2 @ Lambda, the kernel of the bilinear form B."""
        return self.lam[:, None] * self.delta2 * self.lam[None, :]


def _positivity_graph_connected(delta2: np.ndarray) -> bool:
    """Connectivity of the graph with an edge (s,t) whenever Delta^2_st > 0.

    Strict positivity, no epsilon: callers must zero entries deliberately.
    """
    n = delta2.shape[0]
    adj = delta2 > 0.0
    reach = np.zeros(n, dtype=bool)
    reach[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(adj[i])[0]:
                if not reach[j]:
                    reach[j] = True
                    nxt.append(int(j))
        frontier = nxt
    return bool(reach.all())


def validate_system(lam, delta2, tau2) -> SpeciesSystem:
    """Validate raw parameters and return a SpeciesSystem with structure flags.

    Raises ValueError on dimension mismatch, negative entries, asymmetry
    beyond tolerance, or species ratios not summing to 1.
    """
    lam = np.array(lam, dtype=float).reshape(-1)
    delta2 = np.array(delta2, dtype=float)
    tau2 = np.array(tau2, dtype=float).reshape(-1)
    n = lam.size
    if n == 0:
        raise ValueError("at least one species required")
    if delta2.ndim != 2 or delta2.shape != (n, n):
        raise ValueError(f"delta2 must be {n}x{n}, got shape {delta2.shape}")
    if tau2.size != n:
        raise ValueError(f"tau2 must have length {n}, got {tau2.size}")
    if np.any(lam <= 0):
        raise ValueError("species ratios must be strictly positive")
    if abs(lam.sum() - 1.0) > LAMBDA_SUM_TOL:
        raise ValueError(f"species ratios must sum to 1 (got {lam.sum()!r})")
    if np.any(delta2 < 0):
        raise ValueError("delta2 entries must be nonnegative")
    if np.any(tau2 < 0):
        raise ValueError("tau2 entries must be nonnegative")
    scale = float(np.max(np.abs(delta2))) if delta2.size else 0.0
    if scale > 0 and float(np.max(np.abs(delta2 - delta2.T))) > SYMMETRY_RTOL * scale:
        raise ValueError("delta2 is asymmetric beyond tolerance")

    irreducible = _positivity_graph_connected(delta2)
    # Graded PSD verdict near the boundary rather than a Cholesky attempt.
    eigs = np.linalg.eigvalsh(0.5 * (delta2 + delta2.T))
    psd = bool(eigs[0] >= -PSD_RTOL * max(eigs[-1], 0.0))

    lam.setflags(write=False)
    delta2.setflags(write=False)
    tau2.setflags(write=False)
    return SpeciesSystem(lam=lam, delta2=delta2, tau2=tau2, irreducible=irreducible, psd=psd)


def with_profile(sys: SpeciesSystem, delta2, tau2) -> SpeciesSystem:
    """New system with the same species ratios and a replaced variance profile."""
    return validate_system(sys.lam, delta2, tau2)


def _strongly_connected_components(adj: np.ndarray) -> list[np.ndarray]:
    """Mutual-reachability classes of the directed positivity graph (boolean
    closure; the matrices here never exceed a few dozen rows)."""
    n = adj.shape[0]
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = reach @ reach
    mutual = reach & reach.T
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        members = np.nonzero(mutual[start])[0]
        seen[members] = True
        comps.append(members)
    return comps


def perron_eigenpair(M, tol: float = 1e-12, max_iter: int = 200_000) -> tuple[float, np.ndarray]:
    """Spectral radius and Perron vector of a nonnegative irreducible matrix.

    Power iteration with Collatz-Wielandt bracketing: for any positive v the
    radius lies between min and max of (Mv)_i / v_i, so the bracket width is a
    rigorous stopping test.  The iteration itself runs on M + cI (primitive,
    so it converges even for periodic patterns) while the bracket is evaluated
    on M, which keeps the shift out of the returned value.  Returns (rho, v)
    with v normalized in sup norm.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    top_entry = float(M.max())
    if top_entry <= 0.0:
        return 0.0, np.full(n, 1.0)
    shift = top_entry
    v = np.full(n, 1.0)
    rho = 0.0
    for _ in range(max_iter):
        Mv = M @ v
        ratios = Mv / v
        lo, hi = float(ratios.min()), float(ratios.max())
        rho = 0.5 * (lo + hi)
        if hi - lo <= tol * max(hi, 1e-300):
            return rho, v
        v = Mv + shift * v
        v /= v.max()
    return rho, v


def spectral_radius(M, tol: float = 1e-12) -> float:
    """Spectral radius of a nonnegative square matrix.

    Irreducible inputs go through power iteration with Collatz-Wielandt
    bracketing; reducible inputs reduce to the maximum over the strongly
    connected blocks of the positivity graph, each of which is irreducible
    (the off-block triangle of the Frobenius normal form contributes nothing
    to the spectrum).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"square matrix required, got shape {M.shape}")
    if np.any(M < 0):
        raise ValueError("spectral_radius requires nonnegative entries")
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0])
    comps = _strongly_connected_components(M > 0)
    if len(comps) == 1:
        return perron_eigenpair(M, tol=tol)[0]
    best = 0.0
    for comp in comps:
        block = M[np.ix_(comp, comp)]
        if comp.size == 1:
            best = max(best, float(block[0, 0]))
        else:
            best = max(best, perron_eigenpair(block, tol=tol)[0])
    return best


def bilinear_B(sys: SpeciesSystem, x, y=None) -> float:
    """B(x, y) = x^T Lambda Delta^2 Lambda y; y defaults to x."""
    x = np.asarray(x, dtype=float)
    if x.size != sys.species_count:
        raise ValueError("vector length does not match species count")
    if y is None:
        y = x
    else:
        y = np.asarray(y, dtype=float)
        if y.size != sys.species_count:
            raise ValueError("vector length does not match species count")
    return float(x @ sys.quadratic_kernel() @ y)


MAX_BOX_SPECIES = 20


def bounding_box_ratio(sys: SpeciesSystem) -> float:
    """Scaling factor R >= 1 between the unit B-ellipsoid and the smallest
    concentric B-ellipsoid containing its axis-aligned bounding box.

    The box half-widths are sqrt((M^-1)_ii) for M = Lambda Delta^2 Lambda, and
    since B is convex the maximum of B over the box is attained at a corner,
    so corner enumeration is exact.  Requires positive-definite Delta^2.
    """
    n = sys.species_count
    if n > MAX_BOX_SPECIES:
        raise ValueError(f"corner enumeration capped at {MAX_BOX_SPECIES} species")
    M = sys.quadratic_kernel()
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    if eigs[0] <= PSD_RTOL * max(abs(eigs[-1]), 1e-300):
        raise ValueError("bounding_box_ratio requires positive-definite Delta^2")
    half_widths = np.sqrt(np.diag(np.linalg.inv(M)))
    best = 0.0
    # v and -v give the same value, so pin the first sign.
    for bits in range(1 << (n - 1)):
        signs = np.ones(n)
        for k in range(n - 1):
            if (bits >> k) & 1:
                signs[k + 1] = -1.0
        v = signs * half_widths
        best = max(best, float(v @ M @ v))
    return best
