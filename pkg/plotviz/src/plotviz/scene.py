"""Figure geometry: turn study rows into backend-neutral primitives.

The scene is a flat, ordered list of primitives:

    ("polyline", points, color, width, dash)
    ("marker", x, y, color)
    ("text", x, y, string, size, anchor, color)
    ("rect", x, y, w, h, stroke, fill)

All coordinates are already in pixels, so backends only draw.  Every
quantity is derived from the input rows and fixed layout constants,
which is what makes renders byte-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

WIDTH, HEIGHT = 760, 460
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 168, 26, 56
PLOT_W = WIDTH - MARGIN_L - MARGIN_R
PLOT_H = HEIGHT - MARGIN_T - MARGIN_B

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
GRID = "#d8d8d8"
FRAME = "#444444"
NOTE = "#666666"

KINDS = ("convergence", "work-precision")

_X_LABEL = {"convergence": "step size h", "work-precision": "cpu seconds"}


@dataclass
class Scene:
    width: int
    height: int
    items: list


def _x_value(row, kind: str) -> Optional[float]:
    if kind == "convergence":
        return row.h
    return row.cpu_seconds


def _drawable(row, kind: str) -> bool:
    x = _x_value(row, kind)
    return (row.status == "ok" and row.error is not None and row.error > 0.0
            and x is not None and x > 0.0)


def _decade_bounds(values: Sequence[float]) -> tuple:
    lo = math.floor(math.log10(min(values)))
    hi = math.ceil(math.log10(max(values)))
    if lo == hi:
        lo -= 1
        hi += 1
    return float(lo), float(hi)


def build_scene(rows: Sequence, kind: str, methods: Optional[Sequence[str]]
                = None, order: int = 3) -> Scene:
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; want one of {KINDS}")

    present = []
    for row in rows:
        if row.method not in present:
            present.append(row.method)
    if methods is None:
        selected = present
    else:
        selected = list(methods)
        for name in selected:
            if name not in present:
                raise ValueError(f"no rows for method {name!r}")
    series = {name: [r for r in rows if r.method == name]
              for name in selected}
    if not selected:
        raise ValueError("no methods to plot")

    points = {
        name: [( _x_value(r, kind), r.error)
               for r in series[name] if _drawable(r, kind)]
        for name in selected
    }
    all_pts = [p for pts in points.values() for p in pts]
    if not all_pts:
        raise ValueError("no successful rows to plot")

    x0, x1 = _decade_bounds([p[0] for p in all_pts])
    y0, y1 = _decade_bounds([p[1] for p in all_pts])

    def px(v: float) -> float:
        return MARGIN_L + (math.log10(v) - x0) / (x1 - x0) * PLOT_W

    def py(v: float) -> float:
        return MARGIN_T + PLOT_H - (math.log10(v) - y0) / (y1 - y0) * PLOT_H

    items: list = []

    # grid and tick labels at integer decades
    for d in range(int(x0), int(x1) + 1):
        gx = MARGIN_L + (d - x0) / (x1 - x0) * PLOT_W
        items.append(("polyline",
                      [(gx, MARGIN_T), (gx, MARGIN_T + PLOT_H)],
                      GRID, 1.0, None))
        items.append(("text", gx, MARGIN_T + PLOT_H + 16, f"1e{d:d}",
                      11, "middle", FRAME))
    for d in range(int(y0), int(y1) + 1):
        gy = MARGIN_T + PLOT_H - (d - y0) / (y1 - y0) * PLOT_H
        items.append(("polyline",
                      [(MARGIN_L, gy), (MARGIN_L + PLOT_W, gy)],
                      GRID, 1.0, None))
        items.append(("text", MARGIN_L - 6, gy + 4, f"1e{d:d}",
                      11, "end", FRAME))

    items.append(("rect", MARGIN_L, MARGIN_T, PLOT_W, PLOT_H, FRAME, None))
    items.append(("text", MARGIN_L + PLOT_W / 2.0, HEIGHT - 14,
                  _X_LABEL[kind], 12, "middle", FRAME))
    items.append(("text", MARGIN_L, 16, "relative error", 12, "start",
                  FRAME))

    # series: connect consecutive successful points, break at failures
    legend_y = MARGIN_T + 8
    for idx, name in enumerate(selected):
        color = PALETTE[idx % len(PALETTE)]
        segment: list = []
        segments: list = []
        for row in series[name]:
            if _drawable(row, kind):
                segment.append((px(_x_value(row, kind)), py(row.error)))
            else:
                if segment:
                    segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            if len(seg) > 1:
                items.append(("polyline", seg, color, 1.6, None))
            for (mx, my) in seg:
                items.append(("marker", mx, my, color))

        failed = sum(1 for r in series[name] if r.status == "failed")
        lx = MARGIN_L + PLOT_W + 16
        items.append(("polyline",
                      [(lx, legend_y), (lx + 20, legend_y)],
                      color, 1.6, None))
        items.append(("marker", lx + 10, legend_y, color))
        items.append(("text", lx + 26, legend_y + 4, name, 12, "start",
                      FRAME))
        legend_y += 18
        if failed:
            items.append(("text", lx + 26, legend_y + 2,
                          f"{failed} failed omitted", 10, "start", NOTE))
            legend_y += 15

    # reference-order triangle, pinned to the lower-right plot corner
    if kind == "convergence":
        sx = PLOT_W / (x1 - x0)
        sy = PLOT_H / (y1 - y0)
        half = 0.5
        bx = MARGIN_L + PLOT_W - 18.0
        by = MARGIN_T + PLOT_H - 22.0
        tx = bx - half * sx
        ty = by - order * half * sy
        if ty < MARGIN_T + 8:
            ty = MARGIN_T + 8.0
        items.append(("polyline",
                      [(tx, by), (bx, by), (bx, ty), (tx, by)],
                      NOTE, 1.2, None))
        items.append(("text", bx - 4, (by + ty) / 2.0 + 4,
                      f"slope {order:d}", 11, "end", NOTE))

    return Scene(width=WIDTH, height=HEIGHT, items=items)
