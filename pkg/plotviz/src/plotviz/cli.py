"""Command line entry point.

    plotviz study.csv more.csv --kind convergence --out fig.svg

Exit codes: 0 on success, 2 for usage errors (argparse), 1 when the
input data cannot be plotted (parse failure, unknown method, no
successful rows).
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import render_file
from .scene import KINDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="Render study CSV files as log-log SVG or PNG figures.",
    )
    parser.add_argument("csvs", nargs="+", metavar="CSV",
                        help="input CSV files in the study schema")
    parser.add_argument("--kind", choices=KINDS, default="convergence",
                        help="x axis: step size or cpu seconds")
    parser.add_argument("--out", default="figure.svg",
                        help="output path; .png selects the PNG backend")
    parser.add_argument("--methods", default=None,
                        help="comma-separated method filter")
    parser.add_argument("--order", type=int, default=3,
                        help="slope of the reference triangle")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    methods = None
    if args.methods is not None:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        render_file(args.csvs, args.kind, args.out, methods=methods,
                    order=args.order)
    except (ValueError, OSError) as exc:
        print(f"plotviz: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
