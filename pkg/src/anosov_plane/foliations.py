"""Leaf charts of the example structures, Brouwer-line tests and the
conjugacy ``h(x, y) = (x, psi(x y) |y|)``."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .domains import Domain, DomainError, DomainKind, Window, region_polygon
from .metrics import MetricField, Profile, ThetaProfile
from .plane_core import Curve, PlaneMap, Point, T

__all__ = [
    "ChartKind",
    "LeafChart",
    "Leaf",
    "AnosovStructure",
    "GeometryError",
    "leaf_through",
    "same_leaf",
    "leaves_intersect",
    "is_brouwer_line",
    "conjugacy_h",
    "default_psi",
    "trace_integral_curve",
    "band_u_structure",
    "hyperbola_v_structure",
    "whisker_structure",
    "frame_structure",
    "standard_structure",
    "TRACE_STEP",
    "TOL_LEAF",
]

TRACE_STEP = 1e-3
TOL_LEAF = 1e-6
MAX_TRACE_STEPS = 400_000


class GeometryError(ValueError):
    pass


class ChartKind(str, enum.Enum):
    VERTICAL = "VerticalInDomain"
    HORIZONTAL = "HorizontalInDomain"
    FRAME_STABLE = "FrameIntegral(stable)"
    FRAME_UNSTABLE = "FrameIntegral(unstable)"


@dataclass(frozen=True)
class LeafChart:
    kind: ChartKind
    context: Domain | ThetaProfile

    def __post_init__(self):
        object.__setattr__(self, "kind", ChartKind(self.kind))
        if self.is_line_based != isinstance(self.context, Domain):
            raise ValueError("line charts need a Domain, frame charts a ThetaProfile")

    @property
    def is_line_based(self) -> bool:
        return self.kind in (ChartKind.VERTICAL, ChartKind.HORIZONTAL)

    def contains(self, p: Point) -> bool:
        return self.context.contains(p) if self.is_line_based else True

    def direction_xy(self, x):
        """Unit direction field of the chart's leaves (vectorised in ``x``)."""
        x = np.asarray(x, dtype=float)
        if self.kind is ChartKind.VERTICAL:
            return np.zeros_like(x), np.ones_like(x)
        if self.kind is ChartKind.HORIZONTAL:
            return np.ones_like(x), np.zeros_like(x)
        th = self.context(x)
        if self.kind is ChartKind.FRAME_UNSTABLE:
            th = th + np.pi / 2
        return np.cos(th), np.sin(th)


@dataclass(frozen=True)
class Leaf:
    trace: Curve
    identity_key: tuple
    chart: LeafChart
    # endpoints where the trace stops at the domain boundary (not in the leaf)
    open_ends: tuple[bool, bool] = (False, False)


def _check_window(window: Window) -> Window:
    xmin, xmax, ymin, ymax = map(float, window)
    if not (xmin < xmax and ymin < ymax):
        raise GeometryError(f"empty window {window}")
    return xmin, xmax, ymin, ymax


def _line_leaf(chart: LeafChart, p: Point, window: Window) -> Leaf:
    d: Domain = chart.context
    if not d.contains(p):
        raise DomainError(f"{p} is outside {d.kind.value}")
    xmin, xmax, ymin, ymax = _check_window(window)
    vertical = chart.kind is ChartKind.VERTICAL
    coord, along = (p.x, p.y) if vertical else (p.y, p.x)
    sections = d.vertical_intervals if vertical else d.horizontal_intervals
    full = sections(coord, -math.inf, math.inf)
    idx = next((i for i, (a, b) in enumerate(full) if a < along < b), None)
    if idx is None:
        # closed fundamental cells may put p on an interval end
        idx = next(i for i, (a, b) in enumerate(full) if a <= along <= b)
    a, b = full[idx]
    lo, hi = (ymin, ymax) if vertical else (xmin, xmax)
    ca, cb = max(a, lo), min(b, hi)
    if not ca < cb:
        raise GeometryError(f"leaf through {p} misses the window")
    ends = ((coord, ca), (coord, cb)) if vertical else ((ca, coord), (cb, coord))
    return Leaf(Curve(np.array(ends)), (chart.kind.value, coord, idx), chart, (a >= lo, b <= hi))


def _scalar_field(chart: LeafChart):
    if chart.kind is ChartKind.VERTICAL:
        return lambda x, y: (0.0, 1.0)
    if chart.kind is ChartKind.HORIZONTAL:
        return lambda x, y: (1.0, 0.0)
    th = chart.context.scalar
    shift = math.pi / 2 if chart.kind is ChartKind.FRAME_UNSTABLE else 0.0

    def f(x, y):
        a = th(x) + shift
        return math.cos(a), math.sin(a)

    return f


def trace_integral_curve(chart: LeafChart, p: Point, window: Window, step: float = TRACE_STEP,
                         max_steps: int = MAX_TRACE_STEPS) -> Curve:
    """Both-sided fixed-step RK4 trace of the chart's direction field through ``p``."""
    xmin, xmax, ymin, ymax = _check_window(window)

    f = _scalar_field(chart)

    def run(sign):
        pts = []
        x, y = p.x, p.y
        for _ in range(max_steps):
            k1 = f(x, y)
            k2 = f(x + 0.5 * sign * step * k1[0], y + 0.5 * sign * step * k1[1])
            k3 = f(x + 0.5 * sign * step * k2[0], y + 0.5 * sign * step * k2[1])
            k4 = f(x + sign * step * k3[0], y + sign * step * k3[1])
            x += sign * step * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6
            y += sign * step * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6
            pts.append((x, y))
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                break
        return pts

    back = run(-1.0)[::-1]
    fwd = run(1.0)
    return Curve(np.array(back + [(p.x, p.y)] + fwd))


def _preimage(th: ThetaProfile, v: float, lo: float, hi: float) -> tuple[float, float]:
    """``theta^{-1}(v)`` as a closed interval, by bisection (theta is nondecreasing)."""
    def bisect(pred):
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            a, b = (a, mid) if pred(mid) else (mid, b)
        return b

    first = bisect(lambda x: th(x) >= v)
    last = bisect(lambda x: th(x) > v)
    return first, last


def _frame_strip(chart: LeafChart, x0: float) -> tuple[float, float] | None:
    """Maximal x-interval around ``x0`` on which the leaves are graphs over x,
    or ``None`` when the leaf through ``x0`` is a vertical line."""
    th: ThetaProfile = chart.context
    target = 0.0 if chart.kind is ChartKind.FRAME_UNSTABLE else math.pi / 2
    t0 = th(x0)
    m0 = math.floor((t0 - target) / math.pi)
    below, above = -math.inf, math.inf
    for m in (m0 - 2, m0 - 1, m0, m0 + 1, m0 + 2, m0 + 3):
        a, b = _preimage(th, target + m * math.pi, x0 - 3, x0 + 3)
        if a <= x0 <= b:
            return None
        if b < x0:
            below = max(below, b)
        elif a > x0:
            above = min(above, a)
    return below, above


def _frame_key(chart: LeafChart, p: Point) -> tuple:
    strip = _frame_strip(chart, p.x)
    if strip is None:
        return (chart.kind.value, "vertical", round(p.x, 9))
    lo, hi = strip
    xc = 0.5 * (lo + hi)

    def slope(x):
        u, v = chart.direction_xy(x)
        return float(v / u)

    dy, _ = quad(slope, p.x, xc, epsabs=1e-12, epsrel=1e-12, limit=200)
    return (chart.kind.value, round(xc, 6), round(p.y + dy, 6))


def leaf_through(chart: LeafChart, p: Point, window: Window) -> Leaf:
    if chart.is_line_based:
        return _line_leaf(chart, p, window)
    trace = trace_integral_curve(chart, p, window)
    return Leaf(trace, _frame_key(chart, p), chart)


def _point_polyline_distance(q: np.ndarray, pts: np.ndarray) -> float:
    a, b = pts[:-1], pts[1:]
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", q - a, d) / np.where(L2 > 0, L2, 1), 0, 1)
    proj = a + t[:, None] * d
    return float(np.min(np.hypot(*(proj - q).T)))


def same_leaf(chart: LeafChart, p: Point, q: Point, tol_leaf: float = TOL_LEAF) -> bool:
    if chart.is_line_based:
        d: Domain = chart.context
        for r in (p, q):
            if not d.contains(r):
                raise DomainError(f"{r} is outside {d.kind.value}")
        vertical = chart.kind is ChartKind.VERTICAL
        if (p.x if vertical else p.y) != (q.x if vertical else q.y):
            return False
        window = (min(p.x, q.x) - 1, max(p.x, q.x) + 1, min(p.y, q.y) - 1, max(p.y, q.y) + 1)
        leaf = _line_leaf(chart, p, window)
        (x0, y0), (x1, y1) = leaf.trace.samples
        s = q.y if vertical else q.x
        a, b = (y0, y1) if vertical else (x0, x1)
        return a < s < b
    pad = 0.5
    window = (min(p.x, q.x) - pad, max(p.x, q.x) + pad, min(p.y, q.y) - pad, max(p.y, q.y) + pad)
    trace = trace_integral_curve(chart, p, window)
    return _point_polyline_distance(q.as_array(), trace.samples) < tol_leaf


def _segment_hits(A: np.ndarray, B: np.ndarray) -> list[tuple[float, float, float]]:
    """All crossings of polylines ``A`` and ``B`` as ``(x, y, arclength-order)``."""
    out = []
    a0, a1 = A[:-1], A[1:]
    b0, b1 = B[:-1], B[1:]
    # bounding-box prefilter
    axl, axh = np.minimum(a0[:, 0], a1[:, 0]), np.maximum(a0[:, 0], a1[:, 0])
    ayl, ayh = np.minimum(a0[:, 1], a1[:, 1]), np.maximum(a0[:, 1], a1[:, 1])
    for j in range(len(b0)):
        p, q = b0[j], b1[j]
        m = (axl <= max(p[0], q[0])) & (axh >= min(p[0], q[0])) & (ayl <= max(p[1], q[1])) & (ayh >= min(p[1], q[1]))
        for i in np.flatnonzero(m):
            r, s = a0[i], a1[i]
            d1, d2 = s - r, q - p
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if den == 0:
                continue
            w = p - r
            t = (w[0] * d2[1] - w[1] * d2[0]) / den
            u = (w[0] * d1[1] - w[1] * d1[0]) / den
            if 0 <= t <= 1 and 0 <= u <= 1:
                out.append((r[0] + t * d1[0], r[1] + t * d1[1], i + t))
    return out


def _inside(v: float, lo: float, hi: float, open_ends: tuple[bool, bool]) -> bool:
    return (lo < v if open_ends[0] else lo <= v) and (v < hi if open_ends[1] else v <= hi)


def _cross_exact(vert: Leaf, horiz: Leaf) -> Point | None:
    (x, y0), (_, y1) = vert.trace.samples
    (x0, y), (x1, _) = horiz.trace.samples
    if _inside(y, y0, y1, vert.open_ends) and _inside(x, x0, x1, horiz.open_ends):
        return Point(float(x), float(y))
    return None


def leaves_intersect(a: Leaf, b: Leaf) -> Point | None:
    """First crossing of the two traces (in ``a``'s order), excluding excluded ends."""
    kinds = {a.chart.kind, b.chart.kind}
    if kinds == {ChartKind.VERTICAL, ChartKind.HORIZONTAL}:
        return _cross_exact(a, b) if a.chart.kind is ChartKind.VERTICAL else _cross_exact(b, a)
    excluded = []
    for leaf in (a, b):
        for flag, pt in zip(leaf.open_ends, (leaf.trace.samples[0], leaf.trace.samples[-1])):
            if flag:
                excluded.append(pt)
    hits = sorted(_segment_hits(a.trace.samples, b.trace.samples), key=lambda h: h[2])
    for x, y, _ in hits:
        if any(x == e[0] and y == e[1] for e in excluded):
            continue
        return Point(float(x), float(y))
    return None


def _extend_ends(pts: np.ndarray, margin: float) -> np.ndarray:
    head = pts[0] - margin * (pts[1] - pts[0]) / np.linalg.norm(pts[1] - pts[0])
    tail = pts[-1] + margin * (pts[-1] - pts[-2]) / np.linalg.norm(pts[-1] - pts[-2])
    return np.vstack([head, pts, tail])


def is_brouwer_line(c: Curve, m: PlaneMap, window: Window, domain: Domain | None = None,
                    n_probe: int = 400) -> bool:
    """Whether ``m(c)`` and ``m^-1(c)`` lie in different components of ``R - c``.

    ``R`` is ``domain`` intersected with ``window`` (the window alone when no
    domain is given); the curve must cross ``R`` from boundary to boundary.
    """
    import shapely
    from shapely.geometry import LineString
    from shapely.ops import split

    xmin, xmax, ymin, ymax = _check_window(window)
    line = LineString(c.samples)
    if not line.is_simple:
        raise GeometryError("curve is not simple")
    fx, fy = m.forward_xy(c.xs, c.ys)
    if np.any((fx == c.xs) & (fy == c.ys)):
        raise GeometryError("map has a fixed point on the curve")
    region = region_polygon(domain or Domain.full_plane(), window)
    diag = math.hypot(xmax - xmin, ymax - ymin)
    cut = LineString(_extend_ends(c.samples, 0.02 * diag))
    pieces = [g for g in split(region, cut).geoms if g.area > 0]
    if len(pieces) != 2:
        raise GeometryError(f"curve does not split the window region in two ({len(pieces)} pieces)")
    tol = 1e-9 * diag

    def labels(inverse: bool) -> set[int]:
        img = c.mapped(m, inverse=inverse)
        if len(img) < n_probe:
            img = img.refined(int(math.ceil(math.log2(n_probe / (len(img) - 1)))))
        pts = img.samples[:: max(1, len(img) // (4 * n_probe))]
        far = shapely.distance(shapely.points(pts), line) > tol
        pts = pts[far]
        found = set()
        for i, piece in enumerate(pieces):
            if np.any(shapely.contains_xy(piece, pts[:, 0], pts[:, 1])):
                found.add(i)
        return found

    fwd, back = labels(False), labels(True)
    if not fwd or not back:
        raise GeometryError("image or preimage does not meet the window region")
    return len(fwd) == 1 and len(back) == 1 and fwd != back


def default_psi(t: float) -> float:
    """Identity on ``[-1/2, 1/2]``, then ``1/2 + (|t| - 1/2)/(1 - |t|)`` with sign."""
    if not abs(t) < 1:
        raise DomainError(f"psi needs |t| < 1, got {t}")
    a = abs(t)
    if a <= 0.5:
        return t
    return math.copysign(0.5 + (a - 0.5) / (1.0 - a), t)


def conjugacy_h(p: Point, psi: Callable[[float], float] = default_psi) -> Point:
    if not abs(p.x * p.y) < 1:
        raise DomainError(f"{p} is outside V")
    return Point(p.x, psi(p.x * p.y) * abs(p.y))


@dataclass(frozen=True)
class AnosovStructure:
    name: str
    map: PlaneMap
    domain: Domain
    metric: MetricField
    stable_chart: LeafChart
    unstable_chart: LeafChart
    C: float
    lam: float

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("hyperbolicity constant lambda must exceed 1")

    @property
    def line_based(self) -> bool:
        return self.stable_chart.is_line_based and self.unstable_chart.is_line_based


def _line_structure(name: str, domain: Domain, metric: MetricField) -> AnosovStructure:
    return AnosovStructure(name, T, domain, metric, LeafChart(ChartKind.VERTICAL, domain),
                           LeafChart(ChartKind.HORIZONTAL, domain), 1.0, 2.0)


def band_u_structure() -> AnosovStructure:
    d = Domain.band_u()
    return _line_structure("band-u", d, MetricField.conformal(Profile.BAND, d))


def hyperbola_v_structure() -> AnosovStructure:
    d = Domain.hyperbola_v()
    return _line_structure("hyperbola-v", d, MetricField.conformal(Profile.HYP, d))


def standard_structure() -> AnosovStructure:
    return _line_structure("standard-plane", Domain.full_plane(), MetricField.euclidean())


def whisker_structure(spec) -> AnosovStructure:
    # the pushed-forward metric is not constructed; lengths are Euclidean here
    return _line_structure("whisker", Domain.whiskered(spec), MetricField.euclidean())


def frame_structure(lam: float = 0.5, d: float = 1.0, theta: ThetaProfile | None = None) -> AnosovStructure:
    theta = theta or ThetaProfile()
    metric = MetricField.frame(lam, theta)
    return AnosovStructure("frame", PlaneMap.translation(d), Domain.full_plane(), metric,
                           LeafChart(ChartKind.FRAME_STABLE, theta), LeafChart(ChartKind.FRAME_UNSTABLE, theta),
                           1.0, 1.0 / lam)
