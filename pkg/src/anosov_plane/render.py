"""Deterministic SVG portraits of invariant domains and their reachability maps.

Coordinates are written with six significant digits, so identical scenes give
byte-identical files.
"""
from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np
import shapely
from shapely.geometry import LineString, box
from shapely.ops import unary_union

from .domains import DomainError, DomainKind, Window, _band_range, boundary_curves, region_polygon
from .foliations import AnosovStructure, leaf_through
from .plane_core import Point

STYLES = {
    "boundary": {"stroke": "#000000", "stroke-width": 1.2},
    "auxiliary": {"stroke": "#555555", "stroke-width": 0.8, "stroke-dasharray": "4 3"},
    "stable": {"stroke": "#a0a0a0", "stroke-width": 0.7},
    "unstable": {"stroke": "#141414", "stroke-width": 1.6},
    "arrows": {"fill": "#141414"},
    "points": {"fill": "#000000"},
    "labels": {"fill": "#000000", "font-size": 12},
}
ARROW_PX = 6.0
POINT_PX = 2.5


@dataclass
class Layer:
    name: str
    kind: str                       # curves | points | arrows | labels | rects
    items: list = field(default_factory=list)
    style: dict = field(default_factory=dict)


@dataclass
class Scene:
    window: Window
    width: int = 600
    height: int | None = None
    layers: list[Layer] = field(default_factory=list)
    background: str = "#ffffff"

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.window
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("scene window must have positive extent")
        if self.height is None:
            self.height = max(1, round(self.width * (ymax - ymin) / (xmax - xmin)))

    @property
    def scale(self) -> tuple[float, float, float, float]:
        """``(sx, sy, tx, ty)`` with pixel = ``(sx x + tx, sy y + ty)``; ``sy < 0``."""
        xmin, xmax, ymin, ymax = self.window
        sx = self.width / (xmax - xmin)
        sy = -self.height / (ymax - ymin)
        return sx, sy, -sx * xmin, -sy * ymax

    def to_pixel(self, xy: np.ndarray) -> np.ndarray:
        sx, sy, tx, ty = self.scale
        xy = np.asarray(xy, dtype=float)
        return np.column_stack([sx * xy[:, 0] + tx, sy * xy[:, 1] + ty])

    def from_pixel(self, uv: np.ndarray) -> np.ndarray:
        sx, sy, tx, ty = self.scale
        uv = np.asarray(uv, dtype=float)
        return np.column_stack([(uv[:, 0] - tx) / sx, (uv[:, 1] - ty) / sy])

    def layer(self, name: str, kind: str, style: dict | None = None) -> Layer:
        for lay in self.layers:
            if lay.name == name:
                return lay
        lay = Layer(name, kind, [], dict(STYLES.get(name, {})) if style is None else style)
        self.layers.append(lay)
        return lay

    def add_curve(self, layer: str, pts, style: dict | None = None) -> None:
        """Clip a polyline to the window and simplify it to a quarter pixel."""
        pts = np.asarray(pts, dtype=float)
        if len(pts) < 2:
            return
        xmin, xmax, ymin, ymax = self.window
        tol = 0.25 * (xmax - xmin) / self.width
        geom = shapely.clip_by_rect(LineString(pts), xmin, ymin, xmax, ymax)
        lay = self.layer(layer, "curves", style)
        for piece in _lines(geom):
            piece = piece.simplify(tol, preserve_topology=False)
            arr = np.asarray(piece.coords)
            if len(arr) >= 2:
                lay.items.append(arr)

    def add_arrow(self, x: float, y: float, ux: float, uy: float, layer: str = "arrows") -> None:
        # kept only if the whole head fits inside the viewport
        p = self.to_pixel(np.array([[x, y]]))[0]
        if not (ARROW_PX <= p[0] <= self.width - ARROW_PX and ARROW_PX <= p[1] <= self.height - ARROW_PX):
            return
        self.layer(layer, "arrows").items.append((float(x), float(y), float(ux), float(uy)))

    def add_point(self, x: float, y: float, layer: str = "points") -> None:
        xmin, xmax, ymin, ymax = self.window
        if xmin <= x <= xmax and ymin <= y <= ymax:
            self.layer(layer, "points").items.append((float(x), float(y)))

    def add_label(self, x: float, y: float, text: str, layer: str = "labels") -> None:
        xmin, xmax, ymin, ymax = self.window
        if xmin <= x <= xmax and ymin <= y <= ymax:
            self.layer(layer, "labels").items.append((float(x), float(y), str(text)))

    def add_rect(self, layer: str, x0: float, x1: float, y0: float, y1: float, style: dict | None = None) -> None:
        xmin, xmax, ymin, ymax = self.window
        x0, x1, y0, y1 = max(x0, xmin), min(x1, xmax), max(y0, ymin), min(y1, ymax)
        if x0 < x1 and y0 < y1:
            self.layer(layer, "rects", style).items.append((x0, x1, y0, y1))

    def count(self, kind: str) -> int:
        return sum(len(lay.items) for lay in self.layers if lay.kind == kind)


def _lines(geom):
    if geom.is_empty:
        return []
    if geom.geom_type == "LineString":
        return [geom]
    if hasattr(geom, "geoms"):
        return [g for sub in geom.geoms for g in _lines(sub)]
    return []


def _num(v: float) -> str:
    s = "%.6g" % v
    return "0" if s == "-0" else s


def _style_attrs(style: dict) -> str:
    out = []
    for k in sorted(style):
        v = style[k]
        out.append(f"{k}={quoteattr(_num(v) if isinstance(v, float) else str(v))}")
    return " ".join(out)


def to_svg(scene: Scene) -> str:
    W, H = scene.width, scene.height
    lines = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}">',
             f'<rect x="0" y="0" width="{W}" height="{H}" fill="{scene.background}"/>']
    for lay in scene.layers:
        style = dict(lay.style)
        if lay.kind == "curves":
            style.setdefault("stroke", "#000000")
            style.setdefault("fill", "none")
            style.setdefault("stroke-linejoin", "round")
        lines.append(f'<g id={quoteattr(lay.name)} {_style_attrs(style)}>'.replace(" >", ">"))
        if lay.kind == "curves":
            for arr in lay.items:
                px = scene.to_pixel(arr)
                d = "M" + " L".join(f"{_num(u)} {_num(v)}" for u, v in px)
                lines.append(f'<path d="{d}"/>')
        elif lay.kind == "rects":
            for x0, x1, y0, y1 in lay.items:
                (u0, v1), (u1, v0) = scene.to_pixel(np.array([[x0, y0], [x1, y1]]))
                lines.append(f'<rect x="{_num(u0)}" y="{_num(v0)}" width="{_num(u1 - u0)}" '
                             f'height="{_num(v1 - v0)}"/>')
        elif lay.kind == "points":
            for x, y in lay.items:
                (u, v), = scene.to_pixel(np.array([[x, y]]))
                lines.append(f'<circle cx="{_num(u)}" cy="{_num(v)}" r="{_num(POINT_PX)}"/>')
        elif lay.kind == "arrows":
            for x, y, ux, uy in lay.items:
                lines.append(_arrowhead(scene, x, y, ux, uy))
        elif lay.kind == "labels":
            for x, y, text in lay.items:
                (u, v), = scene.to_pixel(np.array([[x, y]]))
                lines.append(f'<text x="{_num(u)}" y="{_num(v)}">{escape(text)}</text>')
        lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _arrowhead(scene: Scene, x, y, ux, uy) -> str:
    sx, sy, _, _ = scene.scale
    (u, v), = scene.to_pixel(np.array([[x, y]]))
    du, dv = ux * sx, uy * sy
    r = math.hypot(du, dv) or 1.0
    du, dv = du / r, dv / r
    tip = (u + ARROW_PX * du, v + ARROW_PX * dv)
    back = (u - 0.5 * ARROW_PX * du, v - 0.5 * ARROW_PX * dv)
    w = 0.45 * ARROW_PX
    a = (back[0] - w * dv, back[1] + w * du)
    b = (back[0] + w * dv, back[1] - w * du)
    pts = " ".join(f"{_num(p)},{_num(q)}" for p, q in (tip, a, b))
    return f'<polygon points="{pts}"/>'


def emit_svg(scene: Scene, path) -> Path:
    """Write ``scene`` atomically (temporary file plus rename)."""
    path = Path(path)
    text = to_svg(scene)
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".svg", dir=path.parent if str(path.parent) else ".")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write SVG: {exc.strerror}", str(path)) from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(exc.errno, f"cannot write SVG: {exc.strerror}", str(path)) from exc
    return path


def _auxiliary_lines(s: AnosovStructure, scene: Scene) -> None:
    xmin, xmax, ymin, ymax = scene.window
    k = s.domain.kind
    if k in (DomainKind.BAND_U, DomainKind.WHISKERED, DomainKind.HYPERBOLA_V):
        lo, hi = _band_range(max(abs(xmin), abs(xmax)) * 1e-3, max(abs(xmin), abs(xmax)))
        for n in range(lo, hi + 1):
            for x in (math.ldexp(1.0, n), -math.ldexp(1.0, n)):
                if not xmin < x < xmax or (x < 0 and k is not DomainKind.HYPERBOLA_V):
                    continue
                for a, b in s.domain.vertical_intervals(x, ymin, ymax):
                    scene.add_curve("auxiliary", [[x, a], [x, b]])
    elif not s.line_based:
        theta = s.unstable_chart.context
        marks = sorted({x for x, _ in theta.knots if x < 1.0})
        for n in range(math.floor(xmin), math.ceil(xmax) + 1):
            for x in marks:
                if xmin < x + n < xmax:
                    scene.add_curve("auxiliary", [[x + n, ymin], [x + n, ymax]])


def _whisker_outline(s: AnosovStructure, scene: Scene) -> None:
    xmin, xmax, ymin, ymax = scene.window
    rects = s.domain.whisker.rectangles()
    lo, hi = _band_range(max(xmin, 1e-300), xmax) if xmax > 0 else (0, -1)
    boxes = []
    for n in range(lo, hi + 1):
        f = math.ldexp(1.0, n)
        boxes += [box(r[0] * f, r[2] / f, r[1] * f, r[3] / f) for r in rects]
    if not boxes:
        return
    span = max(xmax - xmin, ymax - ymin)
    wide = (min(xmin, 0.0) - span, max(xmax, 1.0) + span, min(ymin, 0.0) - span, max(ymax, 1.0) + span)
    band = region_polygon(type(s.domain).band_u(), wide)
    outline = unary_union(boxes).boundary.difference(band)
    for piece in _lines(outline):
        scene.add_curve("boundary", np.asarray(piece.coords))


def render_structure(s: AnosovStructure, window: Window, leaf_seeds, width: int = 600) -> Scene:
    """Domain boundary, stable (light) and unstable (dark) leaves through the seeds, with arrows."""
    seeds = [p if isinstance(p, Point) else Point(*p) for p in leaf_seeds]
    for p in seeds:
        if not s.domain.contains(p):
            raise DomainError(f"seed {p} is outside the domain")
    scene = Scene(tuple(window), width)
    for bc in boundary_curves(s.domain, window):
        scene.add_curve("boundary", bc.parametrization.samples)
    if s.domain.kind is DomainKind.WHISKERED:
        _whisker_outline(s, scene)
    _auxiliary_lines(s, scene)
    for name, chart in (("stable", s.stable_chart), ("unstable", s.unstable_chart)):
        for p in seeds:
            leaf = leaf_through(chart, p, window)
            pts = leaf.trace.samples
            scene.add_curve(name, pts)
            m = pts[len(pts) // 2]
            ux, uy = chart.direction_xy(m[0])
            scene.add_arrow(m[0], m[1], float(ux), float(uy))
    for p in seeds:
        scene.add_point(p.x, p.y)
    return scene


def _tone(n: int, top: int) -> str:
    v = int(round(40 + 190 * n / max(1, top)))
    return f"#{v:02x}{v:02x}{v:02x}"


def render_reachability(grid, width: int = 600) -> Scene:
    """Level sets of a reachability grid, one grey tone per level (darkest first)."""
    if not grid.levels:
        raise ValueError("grid has no levels")
    scene = Scene(tuple(grid.window), width)
    dx, dy = grid.cell_size
    xmin, _, ymin, _ = grid.window
    top = len(grid.levels) - 1
    prev = np.zeros(grid.shape, dtype=bool)
    for n, occ in enumerate(grid.levels):
        new = occ & ~prev
        prev = occ
        name = f"level-{n}"
        scene.layer(name, "rects", {"fill": _tone(n, top), "stroke": "none", "shape-rendering": "crispEdges"})
        for i in np.flatnonzero(new.any(axis=1)):
            row = np.concatenate([[False], new[i], [False]])
            edges = np.flatnonzero(row[1:] != row[:-1])
            y0 = ymin + i * dy
            for a, b in zip(edges[0::2], edges[1::2]):
                scene.add_rect(name, xmin + a * dx, xmin + b * dx, y0, y0 + dy)
    p = grid.center(grid.seed)
    scene.add_point(p.x, p.y)
    return scene
