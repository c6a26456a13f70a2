"""Tiny deterministic SVG writer for tables, orbits and unfolded scenes.

Only what the exporters need: world-coordinate drawing with a y-up frame,
fixed decimal formatting (so identical inputs give byte-identical files), no
external dependencies.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .numbers import as_float

__all__ = ["SvgCanvas", "draw_table", "orbit_svg", "unfolded_svg"]


def _f(x) -> str:
    return f"{x:.6f}"


class SvgCanvas:
    """World-coordinate SVG surface with y pointing up."""

    def __init__(self, bounds, size: int = 640, margin: float = 24.0):
        minx, miny, maxx, maxy = (float(b) for b in bounds)
        w = max(maxx - minx, 1e-9)
        h = max(maxy - miny, 1e-9)
        scale = (size - 2 * margin) / max(w, h)
        self._scale = scale
        self._minx, self._miny = minx, miny
        self._margin = margin
        self.width = int(2 * margin + scale * w)
        self.height = int(2 * margin + scale * h)
        self._maxy = maxy
        self._body: list[str] = []

    def _px(self, p) -> tuple:
        x = self._margin + (float(p[0]) - self._minx) * self._scale
        y = self._margin + (self._maxy - float(p[1])) * self._scale
        return x, y

    def line(self, a, b, stroke="black", width=1.5, dash=None):
        x1, y1 = self._px(a)
        x2, y2 = self._px(b)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._body.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{width}"{extra} />'
        )

    def polyline(self, points: Iterable, stroke="blue", width=1.2):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (self._px(p) for p in points))
        self._body.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}" />'
        )

    def polygon(self, points: Iterable, fill="none", stroke="black", width=1.5):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (self._px(p) for p in points))
        self._body.append(
            f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" stroke-width="{width}" />'
        )

    def circle(self, center, r=3.0, fill="black"):
        cx, cy = self._px(center)
        self._body.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{r}" fill="{fill}" />')

    def to_string(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join([head, *self._body, "</svg>"]) + "\n"


def _bounds_of(points) -> tuple:
    xs = [as_float(p[0]) for p in points]
    ys = [as_float(p[1]) for p in points]
    return min(xs), min(ys), max(xs), max(ys)


def _float_pt(p):
    return (as_float(p[0]), as_float(p[1]))


def draw_table(canvas: SvgCanvas, table) -> None:
    """Walls in black; mirrors in red with a tick on the reflective side."""
    canvas.polygon([_float_pt(p) for p in table.vertices], stroke="black", width=2.0)
    for m in table.mirrors:
        a, b = _float_pt(m.seg.a), _float_pt(m.seg.b)
        canvas.line(a, b, stroke="crimson", width=2.0)
        mx, my = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
        nx, ny = as_float(m.normal[0]), as_float(m.normal[1])
        norm = max((nx * nx + ny * ny) ** 0.5, 1e-12)
        tick = 0.04 * max(canvas.width, canvas.height) / canvas._scale / 10
        canvas.line((mx, my), (mx + tick * nx / norm, my + tick * ny / norm), stroke="crimson", width=1.2)


def orbit_svg(table, points: Sequence) -> str:
    """Render the table and an orbit polyline (points in table coordinates)."""
    canvas = SvgCanvas(_bounds_of(table.vertices))
    draw_table(canvas, table)
    float_pts = [_float_pt(p) for p in points]
    if len(float_pts) >= 2:
        canvas.polyline(float_pts, stroke="royalblue", width=1.3)
    for p in float_pts[:1]:
        canvas.circle(p, r=3.5, fill="royalblue")
    return canvas.to_string()


def unfolded_svg(scenes: Sequence, line_points: Sequence) -> str:
    """Render unfolded polygon copies (grey) and the straightened orbit line.

    ``scenes``: iterable of vertex sequences (one polygon outline per frame).
    ``line_points``: the unfolded straight orbit as a point sequence.
    """
    all_pts = [p for poly in scenes for p in poly] + list(line_points)
    canvas = SvgCanvas(_bounds_of(all_pts))
    for poly in scenes:
        canvas.polygon([_float_pt(p) for p in poly], stroke="silver", width=1.0)
    if len(line_points) >= 2:
        canvas.polyline([_float_pt(p) for p in line_points], stroke="crimson", width=1.4)
    return canvas.to_string()
