"""Study-CSV reading against the fixed experiments schema.

The input contract is the flat CSV written by the study tools:

    method,problem,mode,h,tol,error,cpu_seconds,steps,rejects,
    krylov_dim_total,status,seed

Parse failures name the offending file and 1-based row number.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

EXPECTED_HEADER = (
    "method", "problem", "mode", "h", "tol", "error", "cpu_seconds",
    "steps", "rejects", "krylov_dim_total", "status", "seed",
)


@dataclass
class Row:
    method: str
    problem: str
    mode: str
    h: Optional[float]
    tol: Optional[float]
    error: Optional[float]
    cpu_seconds: float
    status: str


def _opt_float(text: str, path: str, line: int, column: str) -> Optional[float]:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"{path} row {line}: column {column!r} is not a number: {text!r}"
        ) from None


def read_rows(paths: Sequence[str]) -> list:
    """Read and concatenate study rows from the given CSV files."""
    rows = []
    for path in paths:
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != EXPECTED_HEADER:
                raise ValueError(
                    f"{path}: unexpected header {header!r}; want "
                    + ",".join(EXPECTED_HEADER))
            for line, record in enumerate(reader, start=2):
                if len(record) != len(EXPECTED_HEADER):
                    raise ValueError(
                        f"{path} row {line}: {len(record)} fields, "
                        f"want {len(EXPECTED_HEADER)}")
                named = dict(zip(EXPECTED_HEADER, record))
                if named["status"] not in ("ok", "failed"):
                    raise ValueError(
                        f"{path} row {line}: unknown status "
                        f"{named['status']!r}")
                rows.append(Row(
                    method=named["method"],
                    problem=named["problem"],
                    mode=named["mode"],
                    h=_opt_float(named["h"], path, line, "h"),
                    tol=_opt_float(named["tol"], path, line, "tol"),
                    error=_opt_float(named["error"], path, line, "error"),
                    cpu_seconds=_opt_float(
                        named["cpu_seconds"], path, line, "cpu_seconds")
                    or 0.0,
                    status=named["status"],
                ))
    return rows
