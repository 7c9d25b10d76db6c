"""Command-line front end.

Subcommands:
  msk at       --config cfg.toml --out at.csv     AT scan along axis1 + bisection bracket
  msk qstar    --config cfg.toml                  fixed-point report as JSON
  msk parisi   --config cfg.toml --levels 3 [--measure m.json] [--gradient]
  msk gt       --config cfg.toml --u-grid 50 [--out gt.csv]
  msk finite-n --config cfg.toml --sites 6,6 --samples 500 --t 1.0 [--seed 0] [--out runs.ndjson]
  msk sweep    --config cfg.toml [--workers 1]

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical
non-convergence in some grid cell (cells still emitted with error tags).
"""

from __future__ import annotations

import argparse
import json
import sys as _sys

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_config(path: str):
    from .sweep import load_config

    try:
        return load_config(path)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read config: {exc}")
    except Exception as exc:
        raise _CliError(EXIT_CONFIG, f"invalid config: {exc}")


def _fail(code: int, message: str) -> int:
    print(f"msk: {message}", file=_sys.stderr)
    return code


def _cmd_at(args) -> int:
    from .sweep import run_sweep, trace_at_surface

    cfg = _load_config(args.config)
    one_d = cfg.__class__(
        lam=cfg.lam,
        delta2_base=cfg.delta2_base,
        tau2_base=cfg.tau2_base,
        axis1=cfg.axis1,
        axis2=cfg.axis2.__class__(kind=cfg.axis2.kind, lo=cfg.axis2.lo, hi=cfg.axis2.lo, count=1,
                                  direction=cfg.axis2.direction),
        quadrature=cfg.quadrature,
        tasks=("at",),
        rsb_levels=cfg.rsb_levels,
        out_csv=args.out,
    )
    result = run_sweep(one_d, workers=args.workers)
    trace = trace_at_surface(cfg, axis="axis1", tol=args.tol)
    try:
        result.write_csv(args.out)
        with open(args.out + ".bracket.json", "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")
    if trace.crossed:
        print(f"AT bracket: [{trace.bracket_lo!r}, {trace.bracket_hi!r}] ({trace.method})")
    else:
        print("no AT crossing on this ray")
    return EXIT_NUMERICAL if result.any_errors else EXIT_OK


def _cmd_qstar(args) -> int:
    from .fixedpoint import solve_qstar

    cfg = _load_config(args.config)
    sys_obj = cfg.system_at(float(cfg.axis1.values()[0]), float(cfg.axis2.values()[0]))
    report = solve_qstar(sys_obj, cfg.quadrature)
    print(
        json.dumps(
            {
                "q_star": report.q_star.tolist(),
                "q_min": report.q_min.tolist(),
                "classification": report.classification.value,
                "iterations": report.iterations,
                "residual": report.residual,
                "converged": report.converged,
                "rho_interaction": report.rho_interaction,
            }
        )
    )
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _cmd_parisi(args) -> int:
    from .parisi import DiscreteOrderedMeasure, MinimizeOptions, minimize_rsb, parisi_value

    cfg = _load_config(args.config)
    sys_obj = cfg.system_at(float(cfg.axis1.values()[0]), float(cfg.axis2.values()[0]))
    if args.measure:
        try:
            with open(args.measure, "r", encoding="utf-8") as fh:
                mu = DiscreteOrderedMeasure.from_json(fh.read())
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot read measure: {exc}")
        except Exception as exc:
            return _fail(EXIT_CONFIG, f"invalid measure: {exc}")
        ev = parisi_value(sys_obj, mu, cfg.quadrature, want_gradient=args.gradient)
        out = {"value": ev.value, "per_species_x0": ev.per_species_x0.tolist()}
        if args.gradient:
            out["gradient_q"] = ev.gradient_q.tolist()
        print(json.dumps(out))
        return EXIT_OK
    res = minimize_rsb(sys_obj, args.levels, cfg.quadrature, MinimizeOptions(seed=cfg.quadrature.seed))
    print(
        json.dumps(
            {
                "measure": json.loads(res.measure.to_json()),
                "value": res.value,
                "rs_min_value": res.rs_min_value,
                "rs_gap": res.rs_gap,
                "quadrature_error": res.quadrature_error,
                "converged": res.converged,
            }
        )
    )
    return EXIT_OK if res.converged else EXIT_NUMERICAL


def _cmd_gt(args) -> int:
    import csv as _csv

    from .fixedpoint import solve_qstar
    from .gtbound import gt_cost_curve
    from .model import bilinear_B

    cfg = _load_config(args.config)
    sys_obj = cfg.system_at(float(cfg.axis1.values()[0]), float(cfg.axis2.values()[0]))
    fp = solve_qstar(sys_obj, cfg.quadrature)
    q_star = fp.q_star
    rows = []
    ratios = []
    for w in np.linspace(0.0, 1.0, args.u_grid + 1)[1:]:
        for label, u in (("upper", q_star + w * (1.0 - q_star)), ("lower", (1.0 - w) * q_star)):
            res = gt_cost_curve(sys_obj, u, cfg.quadrature, q_star=q_star)
            denom = bilinear_B(sys_obj, u - q_star)
            ratio = res.cost / denom if denom > 1e-12 else float("nan")
            if np.isfinite(ratio):
                ratios.append(ratio)
            rows.append([f"{w:.10g}", label, f"{res.bound:.17g}", f"{res.cost:.17g}", f"{ratio:.10g}"])
    if args.out:
        try:
            with open(args.out, "w", newline="", encoding="utf-8") as fh:
                writer = _csv.writer(fh, lineterminator="\r\n")
                writer.writerow(["u_param", "branch", "bound", "cost", "cost_over_B"])
                writer.writerows(rows)
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write output: {exc}")
    print(json.dumps({"fitted_c0": min(ratios) if ratios else None, "points": len(rows)}))
    return EXIT_OK


def _cmd_finite_n(args) -> int:
    from .finite_n import derived_seed, exact_free_energy, overlap_statistics, sample_instance
    from .fixedpoint import solve_qstar

    cfg = _load_config(args.config)
    sys_obj = cfg.system_at(float(cfg.axis1.values()[0]), float(cfg.axis2.values()[0]))
    try:
        sites = [int(tok) for tok in args.sites.split(",")]
    except ValueError:
        return _fail(EXIT_CONFIG, f"bad --sites {args.sites!r}")
    q_star = solve_qstar(sys_obj, cfg.quadrature).q_star
    sink = open(args.out, "w", encoding="utf-8") if args.out else _sys.stdout
    try:
        means = []
        for k in range(args.samples):
            seed = derived_seed(args.seed, k)
            inst = sample_instance(sys_obj, sites, args.t, seed, spec=cfg.quadrature, q_star=q_star)
            f_n = exact_free_energy(inst)
            stats = overlap_statistics(inst, want_pair_law=False)
            record = {
                "seed": seed,
                "t": args.t,
                "F_N": f_n,
                "overlap_moments": {
                    "mean_overlap": stats.mean_overlap.tolist(),
                    "B_displacement": stats.gibbs_b_displacement,
                },
            }
            sink.write(json.dumps(record) + "\n")
            means.append(f_n)
        arr = np.asarray(means)
        print(
            f"samples={len(arr)} mean_F_N={arr.mean():.8f} se={arr.std(ddof=1) / len(arr) ** 0.5:.2e}",
            file=_sys.stderr,
        )
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")
    finally:
        if args.out:
            sink.close()
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .sweep import run_sweep

    cfg = _load_config(args.config)
    result = run_sweep(cfg, workers=args.workers)
    try:
        result.write_csv(cfg.out_csv)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")
    print(f"wrote {len(result.rows)} rows to {cfg.out_csv}")
    return EXIT_NUMERICAL if result.any_errors else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msk", description="Multi-species SK phase-diagram toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_at = sub.add_parser("at", help="AT scan along axis1 with bisection bracket")
    p_at.add_argument("--config", required=True)
    p_at.add_argument("--out", required=True)
    p_at.add_argument("--tol", type=float, default=1e-8)
    p_at.add_argument("--workers", type=int, default=1)
    p_at.set_defaults(run=_cmd_at)

    p_q = sub.add_parser("qstar", help="solve the overlap fixed point")
    p_q.add_argument("--config", required=True)
    p_q.set_defaults(run=_cmd_qstar)

    p_p = sub.add_parser("parisi", help="evaluate a measure or search for RSB")
    p_p.add_argument("--config", required=True)
    p_p.add_argument("--levels", type=int, default=3)
    p_p.add_argument("--measure", default=None)
    p_p.add_argument("--gradient", action="store_true")
    p_p.set_defaults(run=_cmd_parisi)

    p_g = sub.add_parser("gt", help="two-replica bound cost curve")
    p_g.add_argument("--config", required=True)
    p_g.add_argument("--u-grid", type=int, default=50, dest="u_grid")
    p_g.add_argument("--out", default=None)
    p_g.set_defaults(run=_cmd_gt)

    p_f = sub.add_parser("finite-n", help="finite-size disorder samples")
    p_f.add_argument("--config", required=True)
    p_f.add_argument("--sites", required=True)
    p_f.add_argument("--samples", type=int, default=100)
    p_f.add_argument("--t", type=float, default=1.0)
    p_f.add_argument("--seed", type=int, default=0)
    p_f.add_argument("--out", default=None)
    p_f.set_defaults(run=_cmd_finite_n)

    p_s = sub.add_parser("sweep", help="full grid sweep to CSV")
    p_s.add_argument("--config", required=True)
    p_s.add_argument("--workers", type=int, default=1)
    p_s.set_defaults(run=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except _CliError as exc:
        return _fail(exc.code, str(exc))
    except Exception as exc:
        return _fail(EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
