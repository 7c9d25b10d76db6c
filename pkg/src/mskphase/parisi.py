"""Discrete Parisi measures and their functional.

A measure with r levels is parameterized by thresholds 0 <= zeta_0 < ... <
zeta_{r-1} <= 1 and interior overlap levels 0 <= q_1 <= ... <= q_{r-1} <= 1
(entrywise over species); the atoms are q_l with mass zeta_l - zeta_{l-1},
including the pinned endpoints q_0 = 0 and q_r = 1.  The functional is
evaluated by the backward Gaussian recursion on nested Gauss-Hermite grids,
with the zeta = 0 level handled by its analytic limit (a plain conditional
expectation).  The q-gradient is exact: it is assembled from the forward
weight process on the same grid, not from finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .gauss import QuadratureSpec, gauss_hermite_table, log_cosh
from .model import SpeciesSystem
from .rs_at import rs_value

MAX_LEVELS = 5
MAX_GRID_NODES = 40_000_000
ORDERING_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteOrderedMeasure:
    """r-level Parisi parameterization with totally ordered support.

    zeta: shape (r,), the thresholds zeta_0 .. zeta_{r-1}.
    q:    shape (r-1, S), the interior levels q_1 .. q_{r-1}.
    """

    zeta: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float).reshape(-1)
        q = np.asarray(self.q, dtype=float)
        if q.ndim == 1:
            q = q[None, :] if zeta.size == 2 else q[:, None]
        if zeta.size < 1:
            raise ValueError("at least one threshold required")
        if q.ndim != 2 or q.shape[0] != zeta.size - 1 or q.shape[1] < 1:
            raise ValueError(
                f"expected shape ({zeta.size - 1}, species) for the interior levels, got {q.shape}"
            )
        if zeta[0] < 0.0 or zeta[-1] > 1.0 + 1e-15:
            raise ValueError("thresholds must lie in [0, 1]")
        if np.any(np.diff(zeta) <= 0.0):
            raise ValueError("interior thresholds must be strictly increasing")
        if q.size and (np.any(q < -ORDERING_TOL) or np.any(q > 1.0 + ORDERING_TOL)):
            raise ValueError("overlap levels must lie in [0, 1]")
        if q.shape[0] >= 2 and np.any(np.diff(q, axis=0) < -ORDERING_TOL):
            raise ValueError("overlap levels must be entrywise non-decreasing")
        zeta.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "q", q)

    @property
    def levels(self) -> int:
        return self.zeta.size

    @property
    def species_count(self) -> int:
        return self.q.shape[1]

    def atom_points(self) -> np.ndarray:
        """All r+1 support candidates including the pinned endpoints 0 and 1."""
        n = self.q.shape[1]
        return np.vstack([np.zeros(n), self.q, np.ones(n)])

    def atom_masses(self) -> np.ndarray:
        z = np.concatenate([[0.0], self.zeta, [1.0]])
        return np.diff(z)

    def to_json(self) -> str:
        return json.dumps({"zeta": self.zeta.tolist(), "q": self.q.tolist()})

    @staticmethod
    def from_json(text: str) -> "DiscreteOrderedMeasure":
        data = json.loads(text)
        return DiscreteOrderedMeasure(zeta=np.array(data["zeta"]), q=np.array(data["q"]))


def dirac_measure(point) -> DiscreteOrderedMeasure:
    """Measure with a single atom at the given overlap vector."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    return DiscreteOrderedMeasure(zeta=np.array([0.0, 1.0]), q=point[None, :])


@dataclass(frozen=True)
class ParisiEvaluation:
    value: float
    q_scalars: np.ndarray  # Q_l = q_l^T Lambda Delta^2 Lambda q_l, l = 0..r
    q_species: np.ndarray  # Q_l^s = 2 (Delta^2 Lambda q_l)_s, shape (r+1, S)
    per_species_x0: np.ndarray
    gradient_q: np.ndarray | None = None


def _axis_tables(std_devs: list[float], spec: QuadratureSpec, mc_rng=None):
    """Per-axis (values, weights): degenerate axes collapse to a single node."""
    values, weights = [], []
    x, w = gauss_hermite_table(spec.nodes)
    for k, sd in enumerate(std_devs):
        if sd == 0.0:
            values.append(np.zeros(1))
            weights.append(np.ones(1))
        elif mc_rng is None:
            values.append(sd * x)
            weights.append(w)
        else:
            draws = mc_rng.standard_normal(spec.nodes)
            values.append(sd * draws)
            weights.append(np.full(spec.nodes, 1.0 / spec.nodes))
    return values, weights


def _contract(arr: np.ndarray, axis: int, weights: np.ndarray) -> np.ndarray:
    shape = [1] * arr.ndim
    shape[axis] = weights.size
    return np.sum(arr * weights.reshape(shape), axis=axis, keepdims=True)


def _contract_power(arr: np.ndarray, axis: int, weights: np.ndarray, zeta: float) -> np.ndarray:
    """(1/zeta) log E exp(zeta * arr) along one axis; zeta = 0 uses the mean."""
    if zeta == 0.0:
        return _contract(arr, axis, weights)
    m = np.max(arr, axis=axis, keepdims=True)
    shape = [1] * arr.ndim
    shape[axis] = weights.size
    inner = np.sum(np.exp(zeta * (arr - m)) * weights.reshape(shape), axis=axis, keepdims=True)
    return m + np.log(inner) / zeta


class _SpeciesGrid:
    """Backward recursion state for one species on its nested grid.

    Axis 0 is the external field h, axes 1..r are the per-level Gaussians.
    All arrays keep full ndim with singleton contracted axes so that
    broadcasting stays alignment-free.
    """

    def __init__(self, tau: float, increments: np.ndarray, zeta: np.ndarray, spec, mc_rng=None):
        self.r = increments.size
        self.zeta = zeta
        stds = [tau] + [math.sqrt(v) for v in increments]
        self.values, self.weights = _axis_tables(stds, spec, mc_rng)
        size = 1
        for v in self.values:
            size *= v.size
        if size > MAX_GRID_NODES:
            raise ValueError(
                f"nested grid of {size} nodes exceeds the cap; reduce levels or quadrature nodes"
            )
        ndim = self.r + 1
        terminal = np.zeros([v.size for v in self.values])
        for ax, vals in enumerate(self.values):
            shape = [1] * ndim
            shape[ax] = vals.size
            terminal = terminal + vals.reshape(shape)
        self.field_sum = terminal
        self.x_levels: list[np.ndarray] = [None] * (self.r + 1)
        self.x_levels[self.r] = log_cosh(terminal)
        for l in range(self.r - 1, -1, -1):
            self.x_levels[l] = _contract_power(
                self.x_levels[l + 1], axis=l + 1, weights=self.weights[l + 1], zeta=zeta[l]
            )

    def expected_x0(self) -> float:
        return float(_contract(self.x_levels[0], axis=0, weights=self.weights[0]).ravel()[0])

    def level_weight(self, l: int) -> np.ndarray:
        """W_l = exp(zeta_{l-1} (X_l - X_{l-1})) for 1 <= l <= r."""
        return np.exp(self.zeta[l - 1] * (self.x_levels[l] - self.x_levels[l - 1]))

    def tilt_coefficients(self) -> np.ndarray:
        """a_l components for interior levels l = 1..r-1.

        Inner pass: M_l = E_{l+1}[W_{l+1} M_{l+1}] starting from tanh of the
        terminal field; outer pass: square at level l and push the forward
        weights W_l ... W_1 and the field expectation through.
        """
        tanh_y = np.tanh(self.field_sum)
        inner = [None] * (self.r + 1)
        inner[self.r] = tanh_y
        for l in range(self.r - 1, 0, -1):
            w_next = self.level_weight(l + 1)
            inner[l] = _contract(w_next * inner[l + 1], axis=l + 1, weights=self.weights[l + 1])
        out = np.empty(self.r - 1)
        for l in range(1, self.r):
            acc = np.square(inner[l])
            for k in range(l, 0, -1):
                acc = _contract(self.level_weight(k) * acc, axis=k, weights=self.weights[k])
            out[l - 1] = float(_contract(acc, axis=0, weights=self.weights[0]).ravel()[0])
        return out


def _level_matrices(sys: SpeciesSystem, mu: DiscreteOrderedMeasure):
    full_q = mu.atom_points()  # (r+1, S) with endpoints
    kernel = sys.quadratic_kernel()
    q_scalars = np.einsum("ls,st,lt->l", full_q, kernel, full_q)
    q_species = 2.0 * full_q @ sys.interaction().T
    increments = np.diff(q_species, axis=0)  # (r, S)
    if np.any(increments < -ORDERING_TOL):
        raise ValueError("negative variance increment: overlap ordering violated")
    increments = np.clip(increments, 0.0, None)
    return full_q, q_scalars, q_species, increments


def parisi_value(
    sys: SpeciesSystem,
    mu: DiscreteOrderedMeasure,
    spec: QuadratureSpec,
    want_gradient: bool = False,
) -> ParisiEvaluation:
    """Functional value (and optionally the exact interior q-gradient).

    The gradient row for level l is (zeta_l - zeta_{l-1}) *
    Lambda Delta^2 Lambda (q_l - a_l), with the tilt centers a_l accumulated
    from the weight process on the same grid as the value.
    """
    if mu.levels > MAX_LEVELS:
        raise ValueError(f"at most {MAX_LEVELS} levels supported, got {mu.levels}")
    if mu.species_count != sys.species_count:
        raise ValueError("measure species count does not match the system")
    _, q_scalars, q_species, increments = _level_matrices(sys, mu)
    r = mu.levels
    zeta = mu.zeta
    x0 = np.empty(sys.species_count)
    grids = []
    for s in range(sys.species_count):
        grid = _SpeciesGrid(math.sqrt(sys.tau2[s]), increments[:, s], zeta, spec)
        x0[s] = grid.expected_x0()
        grids.append(grid if want_gradient else None)
    overlap_cost = 0.5 * float(zeta @ np.diff(q_scalars))
    value = math.log(2.0) + float(sys.lam @ x0) - overlap_cost

    gradient = None
    if want_gradient and r >= 2:
        tilt = np.stack([grids[s].tilt_coefficients() for s in range(sys.species_count)], axis=1)
        gaps = np.diff(np.concatenate([[0.0], zeta]))[1:]  # zeta_l - zeta_{l-1}, l=1..r-1
        gradient = gaps[:, None] * ((mu.q - tilt) @ sys.quadratic_kernel())
    elif want_gradient:
        gradient = np.empty((0, sys.species_count))
    return ParisiEvaluation(
        value=value,
        q_scalars=q_scalars,
        q_species=q_species,
        per_species_x0=x0,
        gradient_q=gradient,
    )


def parisi_gradient_q(sys: SpeciesSystem, mu: DiscreteOrderedMeasure, spec: QuadratureSpec) -> np.ndarray:
    """Exact gradient of the functional in the interior overlap levels."""
    return parisi_value(sys, mu, spec, want_gradient=True).gradient_q


def parisi_value_mc(
    sys: SpeciesSystem,
    mu: DiscreteOrderedMeasure,
    spec: QuadratureSpec,
    seed: int | None = None,
) -> float:
    """Nested Monte Carlo evaluation with common random numbers.

    Diagnostic for level counts beyond the quadrature cap: spec.nodes plays
    the role of the per-level sample count, and a fixed seed reuses the same
    normal draws across calls so that nearby measures compare smoothly.
    """
    _, q_scalars, _, increments = _level_matrices(sys, mu)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    x0 = np.empty(sys.species_count)
    for s in range(sys.species_count):
        grid = _SpeciesGrid(math.sqrt(sys.tau2[s]), increments[:, s], mu.zeta, spec, mc_rng=rng)
        x0[s] = grid.expected_x0()
    overlap_cost = 0.5 * float(mu.zeta @ np.diff(q_scalars))
    return math.log(2.0) + float(sys.lam @ x0) - overlap_cost


def _quantile_profile(mu: DiscreteOrderedMeasure):
    """Support atoms with positive mass and their cumulative masses."""
    points = mu.atom_points()
    masses = mu.atom_masses()
    keep = masses > 0.0
    points, masses = points[keep], masses[keep]
    return points, np.cumsum(masses)


def w1_ordered(mu1: DiscreteOrderedMeasure, mu2: DiscreteOrderedMeasure) -> float:
    """1-Wasserstein distance in the L1 ground metric for totally ordered
    discrete measures: the quantile (diagonal) coupling on the merged
    threshold grid is optimal, so no linear program is needed."""
    p1, c1 = _quantile_profile(mu1)
    p2, c2 = _quantile_profile(mu2)
    if p1.shape[1] != p2.shape[1]:
        raise ValueError("measures live on different species counts")
    cuts = np.unique(np.concatenate([c1, c2]))
    total = 0.0
    prev = 0.0
    for c in cuts:
        if c - prev <= 1e-15:
            prev = c
            continue
        i = min(int(np.searchsorted(c1, prev + 1e-15)), p1.shape[0] - 1)
        j = min(int(np.searchsorted(c2, prev + 1e-15)), p2.shape[0] - 1)
        total += (c - prev) * float(np.abs(p1[i] - p2[j]).sum())
        prev = c
    return total


@dataclass(frozen=True)
class SupportReport:
    q_min: np.ndarray
    q_max: np.ndarray
    min_below_qstar: bool
    max_above_qstar: bool
    ordered_around_qstar: bool
    species_level_counts: np.ndarray
    counts_equal: bool


def support_diagnostics(mu: DiscreteOrderedMeasure, q_star, tol: float = 1e-6) -> SupportReport:
    """Smallest/largest support points, their order relative to q*, and the
    per-species count of distinct support values (merging values closer than
    tol), flagging whether all species break into equally many levels."""
    q_star = np.asarray(q_star, dtype=float)
    points, _ = _quantile_profile(mu)
    q_min, q_max = points[0], points[-1]
    below = bool(np.all(q_min <= q_star + tol))
    above = bool(np.all(q_max >= q_star - tol))
    counts = np.empty(points.shape[1], dtype=int)
    for s in range(points.shape[1]):
        vals = np.sort(points[:, s])
        counts[s] = 1 + int(np.sum(np.diff(vals) > tol))
    return SupportReport(
        q_min=q_min,
        q_max=q_max,
        min_below_qstar=below,
        max_above_qstar=above,
        ordered_around_qstar=below and above,
        species_level_counts=counts,
        counts_equal=bool(np.all(counts == counts[0])),
    )


def isotonic_project(rows: np.ndarray) -> np.ndarray:
    """Euclidean projection of each column onto the non-decreasing chain in
    [0, 1]: pool-adjacent-violators along levels, then clipping."""
    rows = np.array(rows, dtype=float)
    levels, species = rows.shape
    for s in range(species):
        y = rows[:, s]
        sol = np.empty(levels)
        weights = np.empty(levels)
        blocks = []
        for v in y:
            blocks.append([v, 1.0])
            while len(blocks) >= 2 and blocks[-2][0] >= blocks[-1][0]:
                v2, w2 = blocks.pop()
                v1, w1 = blocks.pop()
                blocks.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
        pos = 0
        for v, w in blocks:
            sol[pos : pos + int(w)] = v
            pos += int(w)
        rows[:, s] = sol
    return np.clip(rows, 0.0, 1.0)


@dataclass
class MinimizeOptions:
    max_iterations: int = 2000
    grad_tol: float = 1e-7
    starts: int = 4
    seed: int = 0
    zeta_rounds: int = 3
    zeta_grid: int = 13


@dataclass(frozen=True)
class MinimizeResult:
    measure: DiscreteOrderedMeasure
    value: float
    rs_gap: float
    rs_min_value: float
    converged: bool
    grad_norm: float
    iterations: int
    quadrature_error: float


def _pgd_on_levels(sys, zeta, q0, spec, opts) -> tuple[np.ndarray, float, float, int, bool]:
    """Projected gradient descent on the interior levels for fixed thresholds.

    Gradient rows carry a factor (zeta_l - zeta_{l-1}), so steps are
    preconditioned by the inverse threshold gaps; levels with little mass
    would otherwise crawl.
    """
    gaps = np.diff(np.concatenate([[0.0], zeta]))[1:]
    precond = 1.0 / np.maximum(gaps, 1e-6)[:, None]
    q = isotonic_project(np.array(q0))
    mu = DiscreteOrderedMeasure(zeta=zeta, q=q)
    ev = parisi_value(sys, mu, spec, want_gradient=True)
    value, grad = ev.value, ev.gradient_q
    step = 1.0
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        moved = False
        for _ in range(40):
            cand = isotonic_project(q - step * precond * grad)
            mu_c = DiscreteOrderedMeasure(zeta=zeta, q=cand)
            ev_c = parisi_value(sys, mu_c, spec, want_gradient=True)
            if ev_c.value < value - 1e-15:
                q, value, grad = cand, ev_c.value, ev_c.gradient_q
                step = min(step * 1.5, 1e3)
                moved = True
                break
            step *= 0.4
            if step < 1e-15:
                break
        # Projected-gradient stationarity: compare against the feasible move.
        pg = (q - isotonic_project(q - grad)) if grad.size else np.zeros_like(q)
        pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
        if not moved or pg_norm < opts.grad_tol:
            return q, value, pg_norm, iterations, pg_norm < opts.grad_tol
    return q, value, float(np.max(np.abs(grad))), iterations, False


def minimize_rsb(
    sys: SpeciesSystem,
    r: int,
    spec: QuadratureSpec,
    opts: MinimizeOptions | None = None,
) -> MinimizeResult:
    """Search for a measure with r levels improving on the replica-symmetric
    value: projected gradient descent on the overlap levels (exact gradient,
    per-species isotonic projection) alternated with a grid-refined coordinate
    search on the interior thresholds, from several q*-centered starts.

    rs_gap = rs_min_value - value; a positive gap beyond the reported
    quadrature error is evidence that the symmetric solution is not optimal.
    """
    from .fixedpoint import solve_qstar  # local import to avoid cycle at module load

    if r < 2 or r > 4:
        raise ValueError("level count must be between 2 and 4")
    if opts is None:
        opts = MinimizeOptions()
    fp = solve_qstar(sys, spec)
    q_star = fp.q_star
    rs_min = rs_value(sys, q_star, spec)
    rng = np.random.default_rng(opts.seed)
    interior = r - 1

    starts = []
    spread = np.linspace(-0.25, 0.25, interior) if interior > 1 else np.array([0.0])
    starts.append(np.clip(q_star[None, :] + spread[:, None], 0.0, 1.0))
    for _ in range(max(0, opts.starts - 1)):
        jitter = rng.uniform(-0.3, 0.3, size=(interior, sys.species_count))
        starts.append(np.clip(q_star[None, :] + jitter, 0.0, 1.0))

    best = None
    for q0 in starts:
        zeta_interior = np.linspace(0.0, 1.0, r)[1:-1] if r > 2 else np.empty(0)
        zeta = np.concatenate([[0.0], zeta_interior, [1.0]]) if r > 2 else np.array([0.0, 1.0])
        q, value, gnorm, iters, conv = _pgd_on_levels(sys, zeta, q0, spec, opts)
        for _ in range(opts.zeta_rounds if r > 2 else 0):
            improved = False
            for k in range(zeta_interior.size):
                lo = zeta[k] + 1e-3
                hi = zeta[k + 2] - 1e-3
                if hi <= lo:
                    continue
                grid = np.linspace(lo, hi, opts.zeta_grid)
                vals = []
                for zk in grid:
                    z_try = zeta.copy()
                    z_try[k + 1] = zk
                    mu_try = DiscreteOrderedMeasure(zeta=z_try, q=q)
                    vals.append(parisi_value(sys, mu_try, spec).value)
                j = int(np.argmin(vals))
                if vals[j] < value - 1e-14:
                    zeta[k + 1] = grid[j]
                    value = vals[j]
                    improved = True
            if improved:
                q, value, gnorm, it2, conv = _pgd_on_levels(sys, zeta, q, spec, opts)
                iters += it2
            else:
                break
        if best is None or value < best[1]:
            best = (DiscreteOrderedMeasure(zeta=zeta, q=q), value, gnorm, iters, conv)

    measure, value, gnorm, iters, conv = best
    hi_spec = QuadratureSpec(nodes=spec.nodes + 16, mc_samples=spec.mc_samples, seed=spec.seed)
    try:
        quad_err = abs(parisi_value(sys, measure, hi_spec).value - value)
    except ValueError:
        quad_err = float("nan")
    quad_err = max(quad_err, 1e-13)
    return MinimizeResult(
        measure=measure,
        value=value,
        rs_gap=rs_min - value,
        rs_min_value=rs_min,
        converged=conv,
        grad_norm=gnorm,
        iterations=iters,
        quadrature_error=quad_err,
    )
