"""Convergence and work-precision studies with CSV emission.

A study runs one method over a list of step sizes (fixed mode) or
tolerances (adaptive mode) against a tight reference solution, times each
cell, and returns rows in a flat CSV schema:

    method,problem,mode,h,tol,error,cpu_seconds,steps,rejects,
    krylov_dim_total,status,seed

Failed cells (non-finite states, Krylov caps, step-size underflow) are
recorded as rows with status=failed rather than aborting the study.  The
fitted convergence slope follows the rule used for the reported orders:
a least-squares fit over the longest run of at least four consecutive
points whose pairwise slopes stay within 0.25 of their mean.

Cells are independent and may be evaluated on a thread pool; rows are
assembled in input order afterwards, so worker count never changes the
output (timing columns aside).
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .integrators import (
    PartitionedIvp,
    StepFailure,
    StiffnessFailure,
    integrate_adaptive,
    integrate_fixed,
)
from .krylov import ConvergenceFailure

__all__ = [
    "StudyRow",
    "ConvergenceStudy",
    "ReferenceUnavailable",
    "reference_solution",
    "convergence_study",
    "work_precision_study",
    "fit_slope",
    "asymptotic_segment",
    "emit_csv",
    "parse_csv",
    "CSV_FIELDS",
]

DEFAULT_SEED = 42

CSV_FIELDS = (
    "method", "problem", "mode", "h", "tol", "error", "cpu_seconds",
    "steps", "rejects", "krylov_dim_total", "status", "seed",
)

# dense-Jacobian stiff reference is worthwhile up to this dimension
_BDF_DIM_LIMIT = 800

_CELL_ERRORS = (
    StepFailure, StiffnessFailure, ConvergenceFailure, FloatingPointError,
    OverflowError,
)


@dataclass
class StudyRow:
    """One study cell: a single integration run and its outcome."""

    method: str
    problem: str
    mode: str
    h: Optional[float]
    tol: Optional[float]
    error: Optional[float]
    cpu_seconds: float
    steps: int
    rejects: int
    krylov_dim_total: int
    status: str
    seed: int


@dataclass
class ConvergenceStudy:
    rows: list
    slope: Optional[float]
    segment: Optional[tuple]
    diagnostics: str = ""


class ReferenceUnavailable(RuntimeError):
    """The reference integrations did not agree to the required level."""


# ---------------------------------------------------------------------------
# Reference solutions


def _solve(ivp: PartitionedIvp, rtol: float, atol: float, method: str,
           jac=None) -> np.ndarray:
    extra = {} if jac is None else {"jac": jac}
    with np.errstate(all="ignore"):
        sol = solve_ivp(
            lambda t, y: ivp.full_rhs(y),
            (ivp.t0, ivp.tf), ivp.y0,
            method=method, rtol=rtol, atol=atol, **extra)
    if not sol.success:
        raise ReferenceUnavailable(
            f"reference solve ({method}, rtol={rtol}) failed: {sol.message}")
    return sol.y[:, -1]


def reference_solution(ivp: PartitionedIvp, *, rtol: float = 1e-12,
                       atol: float = 1e-12,
                       consistency: float = 1e-10) -> np.ndarray:
    """Endpoint state from a tight scipy solve, checked by refinement.

    The problem is solved twice, the second time with tolerances a decade
    tighter; the two endpoints must agree to `consistency` in the relative
    2-norm, and the tighter one is returned.  Problems carrying a dense
    analytic Jacobian of moderate dimension use the stiff BDF integrator,
    everything else the high-order explicit one.
    """
    use_bdf = (
        ivp.full_jacobian is not None and ivp.y0.shape[0] <= _BDF_DIM_LIMIT
    )
    if use_bdf:
        method = "BDF"
        jac = lambda t, y: ivp.full_jacobian(y)
    else:
        method, jac = "DOP853", None
    coarse = _solve(ivp, rtol, atol, method, jac)
    fine = _solve(ivp, rtol / 10.0, atol / 10.0, method, jac)
    scale = float(np.linalg.norm(fine))
    diff = float(np.linalg.norm(fine - coarse)) / max(scale, 1e-300)
    if diff > consistency:
        raise ReferenceUnavailable(
            f"reference self-consistency {diff:.3e} exceeds {consistency:.1e}"
            f" on problem {ivp.name or '<unnamed>'}")
    return fine


# ---------------------------------------------------------------------------
# Slope fitting


def fit_slope(hs: Sequence[float], errs: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h)."""
    design = np.vstack([np.log(hs), np.ones(len(hs))]).T
    coef, *_ = np.linalg.lstsq(design, np.log(errs), rcond=None)
    return float(coef[0])


def asymptotic_segment(hs: Sequence[float], errs: Sequence[Optional[float]],
                       *, min_points: int = 4,
                       max_deviation: float = 0.25):
    """Longest run of consecutive usable points with stable pairwise slopes.

    `errs` entries that are None, non-finite, or non-positive break the
    candidate runs.  Returns (slope, (first_index, last_index)) of the
    longest qualifying window, preferring the smaller-h window on ties,
    or (None, None) when no window of `min_points` qualifies.
    """
    n = len(hs)
    usable = [
        e is not None and math.isfinite(e) and e > 0.0 for e in errs
    ]
    logs = [
        (math.log(hs[i]), math.log(errs[i])) if usable[i] else None
        for i in range(n)
    ]
    best = None
    for i in range(n):
        for j in range(i + min_points - 1, n):
            if not all(usable[i:j + 1]):
                continue
            pair = [
                (logs[k + 1][1] - logs[k][1]) / (logs[k + 1][0] - logs[k][0])
                for k in range(i, j)
            ]
            mean = sum(pair) / len(pair)
            if max(abs(s - mean) for s in pair) >= max_deviation:
                continue
            cand = (j - i + 1, i, j)
            # longer wins; among equal lengths the later (smaller-h) one
            if best is None or cand[0] > best[0] or (
                    cand[0] == best[0] and cand[1] > best[1]):
                best = cand
    if best is None:
        return None, None
    _, i, j = best
    slope = fit_slope(hs[i:j + 1], [errs[k] for k in range(i, j + 1)])
    return slope, (i, j)


# ---------------------------------------------------------------------------
# Studies


def _relative_error(y: np.ndarray, reference: np.ndarray) -> float:
    scale = float(np.linalg.norm(reference))
    return float(np.linalg.norm(y - reference)) / max(scale, 1e-300)


def _run_cells(cell, count: int, workers: Optional[int]) -> list:
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(cell, range(count)))
    return [cell(i) for i in range(count)]


def _geometric(values: Sequence[float]) -> bool:
    if len(values) < 2:
        return True
    r = values[1] / values[0]
    return all(
        abs(values[k + 1] / values[k] - r) <= 1e-9 * abs(r)
        for k in range(len(values) - 1)
    )


def convergence_study(tableau, ivp: PartitionedIvp,
                      h_list: Sequence[float], *,
                      seed: int = DEFAULT_SEED,
                      krylov_tol: float = 1e-12,
                      workers: Optional[int] = None,
                      reference: Optional[np.ndarray] = None
                      ) -> ConvergenceStudy:
    """Fixed-step error-vs-h study with a fitted asymptotic slope."""
    hs = [float(h) for h in h_list]
    if len(hs) < 5:
        raise ValueError("need at least 5 step sizes")
    if any(h <= 0 for h in hs) or any(
            hs[k + 1] >= hs[k] for k in range(len(hs) - 1)):
        raise ValueError("step sizes must be positive and descending")
    if not _geometric(hs):
        raise ValueError("step sizes must form a geometric sequence")
    ref = reference if reference is not None else reference_solution(ivp)

    def cell(i: int) -> StudyRow:
        h = hs[i]
        start = time.perf_counter()
        error: Optional[float] = None
        status = "failed"
        steps = rejects = kdim = 0
        with np.errstate(all="ignore"):
            try:
                res = integrate_fixed(tableau, ivp, h, krylov_tol=krylov_tol)
                steps = res.stats.steps
                kdim = res.stats.krylov_dim_total
                err = _relative_error(res.y, ref)
                if math.isfinite(err):
                    error, status = err, "ok"
            except _CELL_ERRORS as exc:
                stats = getattr(exc, "stats", None)
                if stats is not None:
                    steps = stats.steps
                    rejects = stats.rejects
                    kdim = stats.krylov_dim_total
        return StudyRow(
            method=tableau.name, problem=ivp.name, mode="fixed",
            h=h, tol=None, error=error,
            cpu_seconds=time.perf_counter() - start,
            steps=steps, rejects=rejects, krylov_dim_total=kdim,
            status=status, seed=seed)

    rows = _run_cells(cell, len(hs), workers)
    errs = [r.error if r.status == "ok" else None for r in rows]
    slope, segment = asymptotic_segment(hs, errs)
    if slope is None:
        ok = sum(1 for r in rows if r.status == "ok")
        diag = (f"no run of >= 4 consecutive points with stable pairwise "
                f"slopes ({ok} of {len(rows)} cells usable)")
    else:
        diag = ""
    return ConvergenceStudy(rows=rows, slope=slope, segment=segment,
                            diagnostics=diag)


def work_precision_study(tableau, ivp: PartitionedIvp,
                         tol_list: Sequence[float], *,
                         seed: int = DEFAULT_SEED,
                         workers: Optional[int] = None,
                         reference: Optional[np.ndarray] = None) -> list:
    """Adaptive error-vs-cost study; stiffness failures become failed rows."""
    tols = [float(t) for t in tol_list]
    if not tols:
        raise ValueError("need at least one tolerance")
    if any(t <= 0 for t in tols) or any(
            tols[k + 1] >= tols[k] for k in range(len(tols) - 1)):
        raise ValueError("tolerances must be positive and descending")
    ref = reference if reference is not None else reference_solution(ivp)

    def cell(i: int) -> StudyRow:
        tol = tols[i]
        start = time.perf_counter()
        error: Optional[float] = None
        status = "failed"
        steps = rejects = kdim = 0
        with np.errstate(all="ignore"):
            try:
                res = integrate_adaptive(tableau, ivp, tol)
                steps = res.stats.accepts
                rejects = res.stats.rejects
                kdim = res.stats.krylov_dim_total
                err = _relative_error(res.y, ref)
                if math.isfinite(err):
                    error, status = err, "ok"
            except _CELL_ERRORS as exc:
                stats = getattr(exc, "stats", None)
                if stats is not None:
                    steps = stats.accepts
                    rejects = stats.rejects
                    kdim = stats.krylov_dim_total
        return StudyRow(
            method=tableau.name, problem=ivp.name, mode="adaptive",
            h=None, tol=tol, error=error,
            cpu_seconds=time.perf_counter() - start,
            steps=steps, rejects=rejects, krylov_dim_total=kdim,
            status=status, seed=seed)

    return _run_cells(cell, len(tols), workers)


# ---------------------------------------------------------------------------
# CSV


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Sequence[StudyRow], target) -> None:
    """Write rows to a path or text file object in the study schema."""
    own = isinstance(target, (str, bytes))
    fh = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow([
                _format(getattr(row, name)) for name in CSV_FIELDS
            ])
    finally:
        if own:
            fh.close()


def _parse_field(name: str, text: str):
    if name in ("method", "problem", "mode", "status"):
        return text
    if name in ("steps", "rejects", "krylov_dim_total", "seed"):
        return int(text)
    if text == "":
        return None
    return float(text)


def parse_csv(source) -> list:
    """Read rows written by emit_csv from a path or text file object."""
    own = isinstance(source, (str, bytes))
    fh = open(source, "r", newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_FIELDS:
            raise ValueError(
                f"unexpected CSV header {header!r}; want {','.join(CSV_FIELDS)}")
        rows = []
        for k, record in enumerate(reader, start=2):
            if len(record) != len(CSV_FIELDS):
                raise ValueError(f"row {k} has {len(record)} fields")
            rows.append(StudyRow(**{
                name: _parse_field(name, text)
                for name, text in zip(CSV_FIELDS, record)
            }))
        return rows
    finally:
        if own:
            fh.close()
