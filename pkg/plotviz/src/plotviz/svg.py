"""Deterministic SVG emitter for scenes.

Coordinates are formatted with two decimals and primitives are written
in scene order, so the same scene always yields the same bytes.
"""
from __future__ import annotations

from .scene import Scene

_FONT = "DejaVu Sans Mono, monospace"
_ANCHOR = {"start": "start", "middle": "middle", "end": "end"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;")
             .replace(">", "&gt;"))


def scene_to_svg(scene: Scene) -> str:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{scene.width}" '
        f'height="{scene.height}" viewBox="0 0 {scene.width} '
        f'{scene.height}">',
        f'<rect x="0" y="0" width="{scene.width}" height="{scene.height}" '
        f'fill="#ffffff"/>',
    ]
    for item in scene.items:
        tag = item[0]
        if tag == "polyline":
            _, pts, color, width, dash = item
            coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<polyline points="{coords}" fill="none" '
                       f'stroke="{color}" stroke-width="{_fmt(width)}"'
                       f'{extra}/>')
        elif tag == "marker":
            _, x, y, color = item
            out.append(f'<rect x="{_fmt(x - 2.5)}" y="{_fmt(y - 2.5)}" '
                       f'width="5" height="5" fill="{color}"/>')
        elif tag == "text":
            _, x, y, s, size, anchor, color = item
            out.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" '
                       f'font-family="{_FONT}" font-size="{size}" '
                       f'text-anchor="{_ANCHOR[anchor]}" fill="{color}">'
                       f'{_esc(s)}</text>')
        elif tag == "rect":
            _, x, y, w, h, stroke, fill = item
            fill_attr = fill if fill else "none"
            stroke_attr = f' stroke="{stroke}"' if stroke else ""
            out.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" '
                       f'width="{_fmt(w)}" height="{_fmt(h)}" '
                       f'fill="{fill_attr}"{stroke_attr}/>')
        else:
            raise ValueError(f"unknown scene item {tag!r}")
    out.append("</svg>")
    return "\n".join(out) + "\n"
