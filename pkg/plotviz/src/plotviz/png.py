"""PNG rendering of scenes through Pillow.

Anchoring is computed manually from measured text widths so the layout
matches the SVG backend, and the image is saved without timestamps or
ancillary chunks that could vary between runs.
"""
from __future__ import annotations

from PIL import Image, ImageDraw, ImageFont

from .scene import Scene


def _font(size: int):
    try:
        return ImageFont.load_default(size=size)
    except TypeError:
        return ImageFont.load_default()


def scene_to_image(scene: Scene) -> Image.Image:
    img = Image.new("RGB", (scene.width, scene.height), "#ffffff")
    draw = ImageDraw.Draw(img)
    for item in scene.items:
        tag = item[0]
        if tag == "polyline":
            _, pts, color, width, _dash = item
            if len(pts) > 1:
                draw.line(pts, fill=color, width=max(1, round(width)))
        elif tag == "marker":
            _, x, y, color = item
            draw.rectangle([x - 2.5, y - 2.5, x + 2.5, y + 2.5], fill=color)
        elif tag == "text":
            _, x, y, s, size, anchor, color = item
            font = _font(size)
            w = draw.textlength(s, font=font)
            if anchor == "middle":
                x -= w / 2.0
            elif anchor == "end":
                x -= w
            draw.text((x, y - size), s, fill=color, font=font)
        elif tag == "rect":
            _, x, y, w, h, stroke, fill = item
            draw.rectangle([x, y, x + w, y + h], outline=stroke, fill=fill)
        else:
            raise ValueError(f"unknown scene item {tag!r}")
    return img


def write_png(scene: Scene, path: str) -> None:
    scene_to_image(scene).save(path, format="PNG")
