"""Turn study CSV files into convergence and work-precision figures.

The input format is the tabular schema produced by the partexp
experiment drivers, but this package reads the files on its own and has
no import-time dependency on the solver code.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .data import Row, read_rows
from .scene import KINDS, PALETTE, Scene, build_scene
from .svg import scene_to_svg

__all__ = [
    "KINDS", "PALETTE", "Row", "Scene", "build_scene", "read_rows",
    "render", "render_file", "scene_to_svg",
]

__version__ = "0.1.0"


def render(rows: Sequence[Row], kind: str, out: str,
           methods: Optional[Sequence[str]] = None, order: int = 3) -> None:
    """Render parsed rows to ``out``; the suffix picks SVG or PNG."""
    scene = build_scene(rows, kind, methods=methods, order=order)
    if out.lower().endswith(".png"):
        from .png import write_png
        write_png(scene, out)
    else:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(scene_to_svg(scene))


def render_file(csvs: Sequence[str], kind: str, out: str,
                methods: Optional[Sequence[str]] = None,
                order: int = 3) -> None:
    """Read one or more study CSV files and render a single figure."""
    render(read_rows(csvs), kind, out, methods=methods, order=order)
