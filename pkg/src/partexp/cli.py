"""Command-line front end: studies, order verification, catalogs.

Subcommands:
    run-fixed     fixed-step convergence study -> CSV + fitted slope line
    run-adaptive  adaptive work-precision study -> CSV
    verify-order  rational order-condition check for one method
    list          builtin methods and problems

Exit codes: 0 success, 2 usage error (unknown names print the catalog),
3 numerical failure (reference unavailable, no successful rows, or a
failed order check); on 3 any partially computed CSV is still written.

Geometric sequences are written start:/ratio:count, so 0.06:/2:7 means
seven step sizes from 0.06 downward, each half the previous one.  The
PARTEXP_WORKERS environment variable supplies a default worker count.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from .experiments import (
    CSV_FIELDS,
    ReferenceUnavailable,
    convergence_study,
    emit_csv,
    reference_solution,
    work_precision_study,
)
from .ordercond.bseries import exact_series
from .ordercond.engine import numerical_bseries, verify_tableau
from .ordercond.trees import canon, enumerate_trees
from .problems import PRESET_NAMES, PROBLEM_NAMES, make_problem
from .tableaus import BUILTIN_NAMES, builtin

__all__ = ["main", "build_parser", "parse_geometric"]

_METHOD_BLURBS = {
    "pexpw3a": "partitioned exponential W-method, 3 stages, order 3(2)",
    "pexpw3b": "partitioned exponential W-method, 3 stages, order 3(2)",
    "pepirkw3a": "partitioned EPIRK W-method, 3 stages, order 3(2)",
    "pepirkw3b": "partitioned EPIRK W-method, 3 stages, order 3(2)",
    "psepirkb": "partitioned split EPIRK method, 3 stages, order 3(2)",
}

_PROBLEM_BLURBS = {
    "lorenz96": "Lorenz-96 with a random linear coupling split (N=40)",
    "semilinear": "1-D semilinear parabolic equation, manufactured solution",
    "allen-cahn": "2-D Allen-Cahn reaction-diffusion (64x64 default)",
    "gray-scott": "2-D three-species Gray-Scott variant (50x50 default)",
}


def parse_geometric(text: str):
    """Parse 'start:/ratio:count' into a descending geometric list."""
    parts = text.split(":/")
    if len(parts) != 2 or ":" not in parts[1]:
        raise argparse.ArgumentTypeError(
            f"expected start:/ratio:count (e.g. 0.06:/2:7), got {text!r}")
    head, tail = parts
    ratio_text, _, count_text = tail.partition(":")
    try:
        start = float(head)
        ratio = float(ratio_text)
        count = int(count_text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"could not parse {text!r}: {exc}") from None
    if start <= 0.0:
        raise argparse.ArgumentTypeError("sequence start must be positive")
    if ratio <= 1.0:
        raise argparse.ArgumentTypeError("sequence ratio must exceed 1")
    if count < 1:
        raise argparse.ArgumentTypeError("sequence count must be at least 1")
    return [start / ratio**k for k in range(count)]


def _default_workers() -> Optional[int]:
    raw = os.environ.get("PARTEXP_WORKERS", "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value > 1 else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partexp",
        description="Partitioned exponential integrator studies")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--method", required=True,
                       help="builtin method name (see `partexp list`)")
        p.add_argument("--problem", required=True,
                       help="problem or preset name (see `partexp list`)")
        p.add_argument("--out", default="study.csv",
                       help="output CSV path (default study.csv)")
        p.add_argument("--seed", type=int, default=42,
                       help="seed recorded in rows and used by problem setup")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads for study cells "
                            "(default: PARTEXP_WORKERS or serial)")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the full-size PDE grids")

    fixed = sub.add_parser("run-fixed", help="fixed-step convergence study")
    add_common(fixed)
    fixed.add_argument("--h-seq", type=parse_geometric, required=True,
                       metavar="START:/RATIO:COUNT",
                       help="geometric step-size list, e.g. 0.06:/2:7")
    fixed.add_argument("--krylov-tol", type=float, default=1e-12,
                       help="subspace convergence tolerance (default 1e-12)")

    adaptive = sub.add_parser("run-adaptive",
                              help="adaptive work-precision study")
    add_common(adaptive)
    adaptive.add_argument("--tol-seq", type=parse_geometric, required=True,
                          metavar="START:/RATIO:COUNT",
                          help="geometric tolerance list, e.g. 1e-3:/10:5")

    verify = sub.add_parser("verify-order",
                            help="check rational order conditions")
    verify.add_argument("--method", required=True)
    verify.add_argument("--order", type=int, default=None,
                        help="order to check (default: the design order)")
    verify.add_argument("--dump-trees", default=None, metavar="PATH",
                        help="write per-tree coefficients and residuals")

    sub.add_parser("list", help="show builtin methods and problems")
    return parser


def _print_catalog(stream=None) -> None:
    out = stream or sys.stdout
    print("methods:", file=out)
    for name in BUILTIN_NAMES:
        print(f"  {name:<10} {_METHOD_BLURBS[name]}", file=out)
    print("problems:", file=out)
    for name in PROBLEM_NAMES:
        print(f"  {name:<10} {_PROBLEM_BLURBS[name]}", file=out)
    print("presets:", file=out)
    print("  " + ", ".join(PRESET_NAMES)
          + "  (Allen-Cahn reaction strengths 10/100/1000)", file=out)


def _resolve(args):
    """Validate method/problem names; on failure print catalog, return None."""
    if args.method not in BUILTIN_NAMES:
        print(f"unknown method {args.method!r}", file=sys.stderr)
        _print_catalog(sys.stderr)
        return None
    if args.problem not in PROBLEM_NAMES + PRESET_NAMES:
        print(f"unknown problem {args.problem!r}", file=sys.stderr)
        _print_catalog(sys.stderr)
        return None
    tableau = builtin(args.method)
    ivp = make_problem(args.problem, paper_scale=args.paper_scale,
                       seed=args.seed)
    return tableau, ivp


def _workers(args) -> Optional[int]:
    if args.workers is not None:
        return args.workers if args.workers > 1 else None
    return _default_workers()


def _flush_header_only(path: str) -> None:
    emit_csv([], path)


def _cmd_run_fixed(args) -> int:
    resolved = _resolve(args)
    if resolved is None:
        return 2
    tableau, ivp = resolved
    try:
        reference = reference_solution(ivp)
    except ReferenceUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        _flush_header_only(args.out)
        return 3
    study = convergence_study(
        tableau, ivp, args.h_seq, seed=args.seed,
        krylov_tol=args.krylov_tol, workers=_workers(args),
        reference=reference)
    emit_csv(study.rows, args.out)
    ok = sum(1 for r in study.rows if r.status == "ok")
    print(f"wrote {args.out}: {len(study.rows)} rows ({ok} ok)")
    if study.slope is None:
        print(f"slope: none ({study.diagnostics})")
    else:
        i, j = study.segment
        print(f"slope: {study.slope:.4f} "
              f"(fitted over h={args.h_seq[i]:.6g}..{args.h_seq[j]:.6g})")
    return 0 if ok else 3


def _cmd_run_adaptive(args) -> int:
    resolved = _resolve(args)
    if resolved is None:
        return 2
    tableau, ivp = resolved
    try:
        reference = reference_solution(ivp)
    except ReferenceUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        _flush_header_only(args.out)
        return 3
    rows = work_precision_study(
        tableau, ivp, args.tol_seq, seed=args.seed,
        workers=_workers(args), reference=reference)
    emit_csv(rows, args.out)
    ok = sum(1 for r in rows if r.status == "ok")
    print(f"wrote {args.out}: {len(rows)} rows ({ok} ok)")
    return 0 if ok else 3


def _dump_trees(tableau, path: str) -> None:
    from .tableaus import PsepirkTableau, SepirkTableau
    split = isinstance(tableau, (PsepirkTableau, SepirkTableau))
    exact = exact_series("S" if split else "W")
    got = numerical_bseries(tableau)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index", "tree", "order", "coefficient", "exact", "residual"])
        for i, t in enumerate(enumerate_trees()):
            g, w = got.coeffs[i], exact.coeffs[i]
            writer.writerow([i + 1, canon(t), t.order, str(g), str(w),
                             str(abs(g - w))])


def _cmd_verify_order(args) -> int:
    if args.method not in BUILTIN_NAMES:
        print(f"unknown method {args.method!r}", file=sys.stderr)
        _print_catalog(sys.stderr)
        return 2
    tableau = builtin(args.method)
    report = verify_tableau(tableau, order=args.order)
    print(f"method {report.name}")
    print(report.primary)
    if report.embedded is not None:
        print(f"embedded {report.embedded}")
    if report.first_violation is not None:
        worst = max(report.primary.violations,
                    key=lambda v: abs(v[1] - v[2]))
        print(f"violations: {len(report.primary.violations)} trees, "
              f"first at tree {report.first_violation}, "
              f"largest residual {float(worst[1] - worst[2]):.3e} "
              f"at tree {worst[0]}")
    if args.dump_trees:
        _dump_trees(tableau, args.dump_trees)
        print(f"wrote {args.dump_trees}")
    return 0 if report.order_ok else 3


def _cmd_list(_args) -> int:
    _print_catalog()
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run-fixed": _cmd_run_fixed,
        "run-adaptive": _cmd_run_adaptive,
        "verify-order": _cmd_verify_order,
        "list": _cmd_list,
    }[args.subcommand]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
