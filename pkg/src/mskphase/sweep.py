"""Phase-diagram sweeps and AT-surface tracing.

A sweep walks a two-axis parameter grid (multiplicative coupling/field scales
by default, per-entry affine rays for generality), classifies each cell
through the fixed point and the AT criterion, and emits one CSV row per cell
in deterministic grid order.  The tracer bisects the AT crossing along one
axis; on zero-field rays it uses the exact subcritical classification (the
fixed point is identically zero and the criterion matrix is the identity
there, so the crossing of the interaction spectral radius through 1/2 is a
point of the AT surface computed without quadrature).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gauss import QuadratureSpec
from .model import SpeciesSystem, spectral_radius, validate_system
from .parisi import MinimizeOptions, minimize_rsb
from .rs_at import gamma_and_at

AXIS_KINDS = ("coupling_scale", "field_scale", "delta2_affine", "tau2_affine")
VALID_TASKS = ("at", "rsb", "gt", "finite_n")


@dataclass(frozen=True)
class AxisSpec:
    kind: str
    lo: float
    hi: float
    count: int
    direction: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in AXIS_KINDS:
            raise ValueError(f"unknown axis kind {self.kind!r}; expected one of {AXIS_KINDS}")
        if self.count < 1:
            raise ValueError("grid count must be at least 1")
        if self.hi < self.lo:
            raise ValueError("axis range must be non-decreasing")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class SweepConfig:
    lam: np.ndarray
    delta2_base: np.ndarray
    tau2_base: np.ndarray
    axis1: AxisSpec
    axis2: AxisSpec
    quadrature: QuadratureSpec
    tasks: tuple[str, ...] = ("at",)
    rsb_levels: int = 3
    out_csv: str = "sweep.csv"

    def system_at(self, v1: float, v2: float) -> SpeciesSystem:
        delta2 = np.array(self.delta2_base, dtype=float)
        tau2 = np.array(self.tau2_base, dtype=float)
        for axis, v in ((self.axis1, v1), (self.axis2, v2)):
            if axis.kind == "coupling_scale":
                delta2 = v * v * (axis.direction if axis.direction is not None else np.array(self.delta2_base))
            elif axis.kind == "field_scale":
                base = axis.direction if axis.direction is not None else _field_direction(self.tau2_base)
                tau2 = v * v * base
            elif axis.kind == "delta2_affine":
                delta2 = delta2 + v * axis.direction
            elif axis.kind == "tau2_affine":
                tau2 = tau2 + v * axis.direction
        return validate_system(self.lam, delta2, tau2)


def _field_direction(tau2_base) -> np.ndarray:
    base = np.array(tau2_base, dtype=float)
    return base if np.any(base > 0) else np.ones_like(base)


def _axis_from_dict(d: dict) -> AxisSpec:
    direction = d.get("direction")
    return AxisSpec(
        kind=d.get("kind", "coupling_scale"),
        lo=float(d["range"][0]),
        hi=float(d["range"][1]),
        count=int(d.get("count", 2)),
        direction=None if direction is None else np.array(direction, dtype=float),
    )


def config_from_dict(data: dict) -> SweepConfig:
    system = data["system"]
    axes = data.get("axes", {})
    quad = data.get("quadrature", {})
    tasks_block = data.get("tasks", {})
    tasks = tuple(tasks_block.get("run", ["at"]))
    for t in tasks:
        if t not in VALID_TASKS:
            raise ValueError(f"unknown task {t!r}; expected subset of {VALID_TASKS}")
    lam = np.array(system["lambda"], dtype=float)
    # Absent axes default to a single-point no-op ray so the other axis alone
    # drives the profile.
    noop_axis = {"kind": "tau2_affine", "range": [0.0, 0.0], "count": 1, "direction": [0.0] * lam.size}
    return SweepConfig(
        lam=lam,
        delta2_base=np.array(system["delta2"], dtype=float),
        tau2_base=np.array(system["tau2"], dtype=float),
        axis1=_axis_from_dict(axes.get("axis1", noop_axis)),
        axis2=_axis_from_dict(axes.get("axis2", noop_axis)),
        quadrature=QuadratureSpec(
            nodes=int(quad.get("nodes", 40)),
            mc_samples=int(quad.get("mc_samples", 200_000)),
            seed=int(quad.get("seed", 0)),
        ),
        tasks=tasks,
        rsb_levels=int(tasks_block.get("rsb_levels", 3)),
        out_csv=str(tasks_block.get("out_csv", "sweep.csv")),
    )


def load_config(path: str) -> SweepConfig:
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            return config_from_dict(json.load(fh))
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))


def _format(x: float) -> str:
    return format(float(x), ".17g")


def csv_header(species: int) -> list[str]:
    cols = ["axis1", "axis2", "rho", "phase"]
    cols += [f"qstar_s{k + 1}" for k in range(species)]
    cols += [f"gamma_s{k + 1}" for k in range(species)]
    cols += ["rsb_gap", "error"]
    return cols


def evaluate_cell(cfg: SweepConfig, v1: float, v2: float) -> list[str]:
    """One CSV row.  Failures are captured into the error column, and
    non-convergence of the fixed point is tagged without discarding values."""
    species = cfg.lam.size
    row = [_format(v1), _format(v2)]
    try:
        sys = cfg.system_at(v1, v2)
        report = gamma_and_at(sys, cfg.quadrature)
        row += [_format(report.rho), report.phase.value]
        row += [_format(x) for x in report.q_star]
        row += [_format(x) for x in report.gamma_diag]
        if "rsb" in cfg.tasks:
            res = minimize_rsb(sys, cfg.rsb_levels, cfg.quadrature, MinimizeOptions())
            row.append(_format(res.rs_gap))
        else:
            row.append("")
        row.append("" if report.fixed_point.converged else "fixed-point iteration not converged")
    except Exception as exc:  # per-cell isolation: sweep continues
        row += ["", ""] + [""] * (2 * species) + ["", f"{type(exc).__name__}: {exc}"]
    return row


def _cell_worker(args):
    cfg, v1, v2 = args
    return evaluate_cell(cfg, v1, v2)


@dataclass(frozen=True)
class SweepResult:
    rows: list[list[str]]
    header: list[str]
    any_errors: bool

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            writer.writerow(self.header)
            writer.writerows(self.rows)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Evaluate the full grid, axis1 outer and axis2 inner; the row order and
    values are independent of the worker count."""
    points = [(v1, v2) for v1 in cfg.axis1.values() for v2 in cfg.axis2.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cell_worker, [(cfg, v1, v2) for v1, v2 in points], chunksize=1))
    else:
        rows = [evaluate_cell(cfg, v1, v2) for v1, v2 in points]
    any_errors = any(r[-1] for r in rows)
    return SweepResult(rows=rows, header=csv_header(cfg.lam.size), any_errors=any_errors)


@dataclass(frozen=True)
class ATTraceResult:
    crossed: bool
    bracket_lo: float
    bracket_hi: float
    rho_lo: float
    rho_hi: float
    method: str
    monotone: bool
    scan_values: np.ndarray
    scan_rho: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "crossed": self.crossed,
                "bracket": [self.bracket_lo, self.bracket_hi],
                "rho_at_bracket": [self.rho_lo, self.rho_hi],
                "method": self.method,
                "rho_monotone_on_scan": self.monotone,
                "scan_values": self.scan_values.tolist(),
                "scan_rho": self.scan_rho.tolist(),
            }
        )


def _bisect_sign(fn, lo, hi, f_lo, f_hi, tol):
    """Shrink [lo, hi] around a sign change of fn; works for either
    orientation (the RS side is where fn <= 0)."""
    rs_on_left = f_lo <= 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if (f_mid <= 0.0) == rs_on_left:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return lo, hi, f_lo, f_hi


def trace_at_surface(
    cfg: SweepConfig,
    axis: str = "axis1",
    other_value: float | None = None,
    tol: float = 1e-8,
    scan_points: int = 9,
) -> ATTraceResult:
    """Bracket the AT crossing along one axis by bisection to width tol.

    Monotonicity of rho along the ray is checked on a coarse scan and
    reported, never assumed.  On rays with identically zero external field
    the subcritical side is exact (zero fixed point, identity criterion
    matrix), so the crossing of the interaction spectral radius through 1/2
    is used directly; it is a point of the AT surface and needs no
    quadrature.  Absence of a sign change is reported, not raised.
    """
    ax = cfg.axis1 if axis == "axis1" else cfg.axis2
    if other_value is None:
        other = cfg.axis2 if axis == "axis1" else cfg.axis1
        other_value = float(other.values()[0])

    def system_of(v: float) -> SpeciesSystem:
        return cfg.system_at(v, other_value) if axis == "axis1" else cfg.system_at(other_value, v)

    lo, hi = ax.lo, ax.hi
    probes = np.linspace(lo, hi, max(3, scan_points))
    zero_field = all(np.all(system_of(float(v)).tau2 == 0.0) for v in (lo, hi, probes[len(probes) // 2]))

    if zero_field:
        method = "zero_field_exact"

        def rho_fn(v: float) -> float:
            return spectral_radius(system_of(v).interaction())

    else:
        method = "quadrature_bisection"

        def rho_fn(v: float) -> float:
            return gamma_and_at(system_of(v), cfg.quadrature).rho

    scan_rho = np.array([rho_fn(float(v)) for v in probes])
    diffs = np.diff(scan_rho)
    monotone = bool(np.all(diffs >= -1e-10) or np.all(diffs <= 1e-10))
    g = scan_rho - 0.5
    crossing = None
    for k in range(len(probes) - 1):
        if (g[k] <= 0.0) != (g[k + 1] <= 0.0):
            crossing = k
            break
    if crossing is None:
        return ATTraceResult(
            crossed=False,
            bracket_lo=lo,
            bracket_hi=hi,
            rho_lo=float(scan_rho[0]),
            rho_hi=float(scan_rho[-1]),
            method=method,
            monotone=monotone,
            scan_values=probes,
            scan_rho=scan_rho,
        )
    b_lo, b_hi, f_lo, f_hi = _bisect_sign(
        lambda v: rho_fn(v) - 0.5,
        float(probes[crossing]),
        float(probes[crossing + 1]),
        float(g[crossing]),
        float(g[crossing + 1]),
        tol,
    )
    return ATTraceResult(
        crossed=True,
        bracket_lo=b_lo,
        bracket_hi=b_hi,
        rho_lo=f_lo + 0.5,
        rho_hi=f_hi + 0.5,
        method=method,
        monotone=monotone,
        scan_values=probes,
        scan_rho=scan_rho,
    )
