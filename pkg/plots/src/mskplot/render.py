"""Rendering of sweep results.

Four figure kinds:

- phase_map: RS/RSB cell shading over the two sweep axes, with the traced
  AT bracket overlaid when a ``<csv>.bracket.json`` sidecar is present.
- at_curve: the AT number along axis1 with the 1/2 threshold and bracket.
- gap_heatmap: the RSB improvement column over the grid.
- finite_n_convergence: mean finite-size free energy against the site count,
  with the symmetric-solution value as a horizontal reference.  This kind
  reads its own small schema (n_sites, mean_F_N, se, rs_min_value), since the
  sweep schema carries no finite-size columns.

Figures are deterministic: fixed figure geometry, no timestamps, stable
ordering of drawn artists.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("phase_map", "at_curve", "gap_heatmap", "finite_n_convergence")
SWEEP_BASE_COLUMNS = ("axis1", "axis2", "rho", "phase", "rsb_gap", "error")
CONVERGENCE_COLUMNS = ("n_sites", "mean_F_N", "se", "rs_min_value")


class SchemaError(ValueError):
    """Input CSV does not match the expected header."""


@dataclass(frozen=True)
class PlotJob:
    input_csv: str
    kind: str
    output_path: str
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _read_rows(path: str, required: tuple[str, ...]) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"missing column {column!r} in {path}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"no data rows in {path}")
    return rows


def _grid(rows: list[dict], column: str):
    xs = np.array(sorted({float(r["axis1"]) for r in rows}))
    ys = np.array(sorted({float(r["axis2"]) for r in rows}))
    grid = np.full((ys.size, xs.size), np.nan)
    for r in rows:
        if r.get("error"):
            continue
        value = r.get(column, "")
        if value == "":
            continue
        i = int(np.searchsorted(ys, float(r["axis2"])))
        j = int(np.searchsorted(xs, float(r["axis1"])))
        grid[i, j] = float(value)
    return xs, ys, grid


def _load_bracket(csv_path: str):
    sidecar = csv_path + ".bracket.json"
    if not os.path.exists(sidecar):
        return None
    with open(sidecar, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data if data.get("crossed") else None


def _edges(values: np.ndarray) -> np.ndarray:
    if values.size == 1:
        half = max(abs(values[0]) * 0.05, 0.5)
        return np.array([values[0] - half, values[0] + half])
    mids = 0.5 * (values[1:] + values[:-1])
    return np.concatenate([[2 * values[0] - mids[0]], mids, [2 * values[-1] - mids[-1]]])


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=110)
    return fig, ax


def _finish(fig, ax, job: PlotJob, default_x: str, default_y: str):
    ax.set_xlabel(job.xlabel or default_x)
    ax.set_ylabel(job.ylabel or default_y)
    fig.tight_layout()
    fig.savefig(job.output_path, format="png")
    plt.close(fig)


def _render_phase_map(job: PlotJob) -> None:
    rows = _read_rows(job.input_csv, SWEEP_BASE_COLUMNS)
    xs = np.array(sorted({float(r["axis1"]) for r in rows}))
    ys = np.array(sorted({float(r["axis2"]) for r in rows}))
    grid = np.full((ys.size, xs.size), np.nan)
    for r in rows:
        if r.get("error") or r["phase"] not in ("RS", "RSB"):
            continue
        i = int(np.searchsorted(ys, float(r["axis2"])))
        j = int(np.searchsorted(xs, float(r["axis1"])))
        grid[i, j] = 0.0 if r["phase"] == "RS" else 1.0
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(
        _edges(xs), _edges(ys), grid, cmap="coolwarm", vmin=0.0, vmax=1.0, shading="flat"
    )
    bar = fig.colorbar(mesh, ax=ax, ticks=[0.0, 1.0])
    bar.ax.set_yticklabels(["RS", "RSB"])
    bracket = _load_bracket(job.input_csv)
    if bracket is not None:
        lo, hi = bracket["bracket"]
        ax.axvline(lo, color="k", lw=1.0, ls="--")
        ax.axvline(hi, color="k", lw=1.0, ls="--")
    ax.set_title("phase map")
    _finish(fig, ax, job, "axis1", "axis2")


def _render_at_curve(job: PlotJob) -> None:
    rows = _read_rows(job.input_csv, SWEEP_BASE_COLUMNS)
    points = sorted(
        (float(r["axis1"]), float(r["rho"]))
        for r in rows
        if not r.get("error") and r["rho"] != ""
    )
    if not points:
        raise SchemaError(f"no usable rho values in {job.input_csv}")
    xs = np.array([p[0] for p in points])
    rhos = np.array([p[1] for p in points])
    fig, ax = _new_axes()
    ax.plot(xs, rhos, marker="o", ms=3, lw=1.2, color="tab:blue", label="rho")
    ax.axhline(0.5, color="tab:gray", lw=1.0, label="threshold 1/2")
    bracket = _load_bracket(job.input_csv)
    if bracket is not None:
        lo, hi = bracket["bracket"]
        mid = 0.5 * (lo + hi)
        ax.axvline(mid, color="tab:red", lw=1.0, ls="--", label="AT crossing")
    ax.legend(loc="best")
    ax.set_title("AT criterion along the ray")
    _finish(fig, ax, job, "axis1", "rho")


def _render_gap_heatmap(job: PlotJob) -> None:
    rows = _read_rows(job.input_csv, SWEEP_BASE_COLUMNS)
    xs, ys, grid = _grid(rows, "rsb_gap")
    fig, ax = _new_axes()
    mesh = ax.pcolormesh(_edges(xs), _edges(ys), grid, cmap="viridis", shading="flat")
    fig.colorbar(mesh, ax=ax, label="rsb_gap")
    ax.set_title("RSB improvement over the symmetric value")
    _finish(fig, ax, job, "axis1", "axis2")


def _render_finite_n(job: PlotJob) -> None:
    rows = _read_rows(job.input_csv, CONVERGENCE_COLUMNS)
    rows = sorted(rows, key=lambda r: float(r["n_sites"]))
    n = np.array([float(r["n_sites"]) for r in rows])
    mean = np.array([float(r["mean_F_N"]) for r in rows])
    se = np.array([float(r["se"]) for r in rows])
    reference = float(rows[-1]["rs_min_value"])
    fig, ax = _new_axes()
    ax.errorbar(n, mean, yerr=3 * se, fmt="o-", ms=4, capsize=3, label="mean F_N (3 se)")
    ax.axhline(reference, color="tab:red", lw=1.0, ls="--", label="min RS")
    ax.legend(loc="best")
    ax.set_title("finite-size free energy")
    _finish(fig, ax, job, "N", "free energy")


_RENDERERS = {
    "phase_map": _render_phase_map,
    "at_curve": _render_at_curve,
    "gap_heatmap": _render_gap_heatmap,
    "finite_n_convergence": _render_finite_n,
}


def render(job: PlotJob) -> str:
    """Render the figure; returns the output path.  Raises SchemaError before
    creating any file when the input does not parse."""
    _RENDERERS[job.kind](job)
    return job.output_path
