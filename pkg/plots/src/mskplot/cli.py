"""mskplot command line: render one figure from a sweep CSV."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mskplot", description="Figures from msk sweep CSV files")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_path", required=True)
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = PlotJob(
        input_csv=args.input_csv,
        kind=args.kind,
        output_path=args.output_path,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        path = render(job)
    except SchemaError as exc:
        print(f"mskplot: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mskplot: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
