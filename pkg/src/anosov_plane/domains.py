"""T-invariant open discs together with their fundamental cells.

Membership is evaluated from the defining inequalities in ``tau = x y``.  The
whiskered domain is the band ``1 < tau < 2`` together with every ``T``-image of
a thickened whisker attached to the cell ``D_1``.  The whisker centre line is an
axis-aligned square wave (vertical runs through the crossings of the height
``c``, horizontal runs over each extremum), so its tube is a finite union of open
rectangles in cell coordinates.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .plane_core import ITERATION_CAP, Curve, PlaneMap, Point

__all__ = [
    "DomainKind",
    "Domain",
    "WhiskerSpec",
    "WhiskerSpecError",
    "BoundaryCurve",
    "DomainError",
    "contains",
    "fundamental_cell",
    "reduce_to_cell",
    "invariance_check",
    "default_whisker",
    "sample_points",
    "boundary_curves",
    "region_polygon",
    "merge_intervals",
]

Window = tuple[float, float, float, float]  # xmin, xmax, ymin, ymax


class DomainError(ValueError):
    """A point lies outside the domain an operation requires."""


class WhiskerSpecError(ValueError):
    pass


class DomainKind(str, enum.Enum):
    FULL_PLANE = "FullPlane"
    BAND_U = "BandU"
    HYPERBOLA_V = "HyperbolaV"
    WHISKERED = "Whiskered"
    FUNDAMENTAL_DA = "FundamentalDa"
    FUNDAMENTAL_TILDE_DA = "FundamentalTildeDa"
    WHISKERED_CELL = "WhiskeredCell"


@dataclass(frozen=True)
class WhiskerSpec:
    a: float
    b: float
    extrema_x: tuple[float, ...]
    extrema_y: tuple[float, ...]
    c: float
    crossings_x: tuple[float, ...]
    eps: float
    width: float

    def __post_init__(self):
        for name in ("extrema_x", "extrema_y", "crossings_x"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def n_extrema(self) -> int:
        return len(self.extrema_x)

    @property
    def maxima(self) -> list[float]:
        return [y for y in self.extrema_y if y > self.c]

    @property
    def minima(self) -> list[float]:
        return [y for y in self.extrema_y if y < self.c]

    def marked_points(self) -> list[Point]:
        """``p_j = (x_{2j}, c)`` for ``j = 0..N``."""
        return [Point(x, self.c) for x in self.crossings_x]

    def rectangles(self) -> list[tuple[float, float, float, float]]:
        """Open rectangles ``(x0, x1, y0, y1)`` of the tube, in cell coordinates.

        Order: vertical bars ``V_0..V_N`` then horizontal bars ``H_0..H_{N-1}``.
        """
        w, xs, ys, c = self.width, self.crossings_x, self.extrema_y, self.c
        n = self.n_extrema
        rects = []
        # V_0 dips below the tau = 2 edge so that it overlaps the band.
        top0 = max(ys[0], c)
        rects.append((xs[0] - w, xs[0] + w, 2.0 / (xs[0] + w) - w, top0 + w))
        for j in range(1, n):
            lo, hi = sorted((ys[j - 1], ys[j]))
            rects.append((xs[j] - w, xs[j] + w, lo - w, hi + w))
        lo, hi = sorted((ys[n - 1], c))
        rects.append((xs[n] - w, xs[n] + w, lo - w, hi + w))
        for j in range(n):
            rects.append((xs[j] - w, xs[j + 1] + w, ys[j] - w, ys[j] + w))
        return rects

    def centerline(self) -> Curve:
        """The square-wave centre line from the attachment to ``(b, c)``."""
        xs, ys = self.crossings_x, self.extrema_y
        pts = [(xs[0], 2.0 / xs[0])]
        for j, y in enumerate(ys):
            pts.append((xs[j], y))
            pts.append((xs[j + 1], y))
        pts.append((xs[-1], self.c))
        return Curve(np.array(pts))

    def validate(self) -> "WhiskerSpec":
        """Raise :class:`WhiskerSpecError` unless every geometric invariant holds."""
        n = self.n_extrema
        w, c, eps = self.width, self.c, self.eps
        if n < 1:
            raise WhiskerSpecError("whisker needs at least one extremum")
        if len(self.extrema_y) != n or len(self.crossings_x) != n + 1:
            raise WhiskerSpecError("need N extrema and N+1 crossings")
        if not (1.0 < self.a < self.b < 2.0):
            raise WhiskerSpecError("need 1 < a < b < 2")
        if self.crossings_x[0] != self.a or self.crossings_x[-1] != self.b:
            raise WhiskerSpecError("crossings must start at a and end at b")
        inter = [v for pair in zip(self.crossings_x, self.extrema_x) for v in pair] + [self.b]
        if any(q <= p for p, q in zip(inter, inter[1:])):
            raise WhiskerSpecError("crossings and extrema must interleave strictly")
        if not (w > 0 and eps > 0):
            raise WhiskerSpecError("width and eps must be positive")
        signs = [y > c for y in self.extrema_y]
        if any(y == c for y in self.extrema_y) or any(s == t for s, t in zip(signs, signs[1:])):
            raise WhiskerSpecError("extrema must alternate above and below c")
        for seq, label, sgn in ((self.maxima, "maxima", 1), (self.minima, "minima", -1)):
            if any(sgn * (q - p) <= 2 * w for p, q in zip(seq, seq[1:])):
                raise WhiskerSpecError(f"{label} must be strictly monotone with gaps above 2*width")
        for y in self.extrema_y:
            if y - eps <= c <= y + eps:
                raise WhiskerSpecError(f"c={c} lies within eps of the extremum {y}")
        if not eps > w:
            raise WhiskerSpecError("eps must exceed the tube half-width")
        gaps = np.diff(self.crossings_x)
        if np.any(gaps <= 4 * w):
            raise WhiskerSpecError("crossings closer than four half-widths")
        rects = self.rectangles()
        if min(r[0] for r in rects) <= 1.0 or max(r[1] for r in rects) >= 2.0:
            raise WhiskerSpecError("whisker tube leaves the band 1 < x < 2")
        if not c > 2.0 / (self.a - w):
            raise WhiskerSpecError("p_0 must lie outside D_1")
        for x0, x1, y0, y1 in rects[1:]:
            if not y0 > 2.0 / x0:
                raise WhiskerSpecError("only the first vertical bar may touch D_1")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("extrema_x", "extrema_y", "crossings_x"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WhiskerSpec":
        keys = ("a", "b", "extrema_x", "extrema_y", "c", "crossings_x", "eps", "width")
        missing = [k for k in keys if k not in d]
        if missing:
            raise WhiskerSpecError(f"whisker spec missing fields: {missing}")
        return cls(**{k: d[k] for k in keys}).validate()


def default_whisker(n: int) -> WhiskerSpec:
    """The documented whisker with ``n`` extrema, the first one a maximum."""
    if n < 1:
        raise WhiskerSpecError("default_whisker needs N >= 1")
    ex = [1.4 + 0.4 * k / n for k in range(n)]
    ey = [2.5 + 0.5 * k / n if k % 2 == 0 else 2.2 - 0.1 * k / n for k in range(n)]
    maxima = ey[0::2]
    minima = ey[1::2]
    c = 0.5 * (min(maxima) + (max(minima) if minima else 2.2))
    cross = [1.3]
    cross += [0.5 * (ex[j - 1] + ex[j]) for j in range(1, n)]
    cross.append(1.5 if n == 1 else 2 * ex[-1] - cross[-1])
    eps = 0.25 * min(abs(y - c) for y in ey)
    env = [q - p for p, q in zip(maxima, maxima[1:])] + [p - q for p, q in zip(minima, minima[1:])]
    width = min(0.02, 0.9 * eps, min(np.diff(cross)) / 5, min(env, default=1.0) / 3)
    spec = WhiskerSpec(cross[0], cross[-1], tuple(ex), tuple(ey), c, tuple(cross), eps, width)
    try:
        return spec.validate()
    except WhiskerSpecError as exc:  # pragma: no cover - construction bug
        raise WhiskerSpecError(f"default_whisker({n}) violates invariants: {exc}") from exc


@dataclass(frozen=True)
class Domain:
    kind: DomainKind
    a: float | None = None
    whisker: WhiskerSpec | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.kind in (DomainKind.FUNDAMENTAL_DA, DomainKind.FUNDAMENTAL_TILDE_DA):
            if self.a is None or not self.a > 0:
                raise ValueError("fundamental cells need a > 0")
        if self.kind in (DomainKind.WHISKERED, DomainKind.WHISKERED_CELL):
            if self.whisker is None:
                raise ValueError("whiskered domains need a WhiskerSpec")
            self.whisker.validate()

    # constructors
    @classmethod
    def full_plane(cls) -> "Domain":
        return cls(DomainKind.FULL_PLANE)

    @classmethod
    def band_u(cls) -> "Domain":
        return cls(DomainKind.BAND_U)

    @classmethod
    def hyperbola_v(cls) -> "Domain":
        return cls(DomainKind.HYPERBOLA_V)

    @classmethod
    def whiskered(cls, spec: WhiskerSpec) -> "Domain":
        return cls(DomainKind.WHISKERED, whisker=spec)

    @classmethod
    def fundamental(cls, a: float = 1.0) -> "Domain":
        return cls(DomainKind.FUNDAMENTAL_DA, a=a)

    @classmethod
    def fundamental_tilde(cls, a: float = 1.0) -> "Domain":
        return cls(DomainKind.FUNDAMENTAL_TILDE_DA, a=a)

    # membership
    def contains_xy(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        t = x * y
        k = self.kind
        if k is DomainKind.FULL_PLANE:
            return np.ones(np.broadcast(x, y).shape, dtype=bool)
        if k is DomainKind.BAND_U:
            return (x > 0) & (t > 1) & (t < 2)
        if k is DomainKind.HYPERBOLA_V:
            return np.abs(t) < 1
        if k is DomainKind.FUNDAMENTAL_DA:
            return (x >= self.a) & (x <= 2 * self.a) & (t >= 1) & (t <= 2)
        if k is DomainKind.FUNDAMENTAL_TILDE_DA:
            return (x >= self.a) & (x <= 2 * self.a) & (t >= -1) & (t <= 1)
        if k is DomainKind.WHISKERED_CELL:
            band = (x >= 1) & (x <= 2) & (t > 1) & (t < 2)
            return band | _in_rects(self.whisker.rectangles(), x, y)
        # WHISKERED: band, or the tube after exact reduction into 1 <= x < 2
        band = (x > 0) & (t > 1) & (t < 2)
        pos = x > 0
        _, e = np.frexp(np.where(pos, x, 1.0))
        n = e - 1
        qx = np.ldexp(np.where(pos, x, 1.0), -n)
        qy = np.ldexp(y, n)
        ok = pos & (np.abs(n) <= ITERATION_CAP)
        return band | (ok & _in_rects(self.whisker.rectangles(), qx, qy))

    def contains(self, p: Point) -> bool:
        return bool(self.contains_xy(p.x, p.y))

    # leaf sections, used by line-based charts
    def vertical_intervals(self, x0: float, lo: float, hi: float) -> list[tuple[float, float]]:
        """Open sub-intervals of ``(lo, hi)`` where the line ``x = x0`` meets the domain."""
        k = self.kind
        if k is DomainKind.FULL_PLANE:
            raw = [(lo, hi)]
        elif k is DomainKind.BAND_U:
            raw = [(1 / x0, 2 / x0)] if x0 > 0 else []
        elif k is DomainKind.HYPERBOLA_V:
            raw = [(lo, hi)] if x0 == 0 else [(-1 / abs(x0), 1 / abs(x0))]
        elif k is DomainKind.FUNDAMENTAL_DA:
            raw = [(1 / x0, 2 / x0)] if self.a <= x0 <= 2 * self.a else []
        elif k is DomainKind.FUNDAMENTAL_TILDE_DA:
            raw = [(-1 / x0, 1 / x0)] if self.a <= x0 <= 2 * self.a else []
        elif k is DomainKind.WHISKERED_CELL:
            raw = [(1 / x0, 2 / x0)] if 1 <= x0 <= 2 else []
            raw += [(r[2], r[3]) for r in self.whisker.rectangles() if r[0] < x0 < r[1]]
        else:
            raw = []
            if x0 > 0:
                raw.append((1 / x0, 2 / x0))
                _, e = math.frexp(x0)
                n = e - 1
                q = math.ldexp(x0, -n)
                s = math.ldexp(1.0, -n)
                raw += [(r[2] * s, r[3] * s) for r in self.whisker.rectangles() if r[0] < q < r[1]]
        return merge_intervals(raw, lo, hi)

    def horizontal_intervals(self, y0: float, lo: float, hi: float) -> list[tuple[float, float]]:
        """Open sub-intervals of ``(lo, hi)`` where the line ``y = y0`` meets the domain."""
        k = self.kind
        if k is DomainKind.FULL_PLANE:
            raw = [(lo, hi)]
        elif k is DomainKind.BAND_U:
            raw = [(1 / y0, 2 / y0)] if y0 > 0 else []
        elif k is DomainKind.HYPERBOLA_V:
            raw = [(lo, hi)] if y0 == 0 else [(-1 / abs(y0), 1 / abs(y0))]
        elif k is DomainKind.FUNDAMENTAL_DA:
            raw = []
            if y0 > 0:
                a0, b0 = max(self.a, 1 / y0), min(2 * self.a, 2 / y0)
                raw = [(a0, b0)] if a0 <= b0 else []
        elif k is DomainKind.FUNDAMENTAL_TILDE_DA:
            b0 = 2 * self.a if y0 == 0 else min(2 * self.a, 1 / abs(y0))
            raw = [(self.a, b0)] if self.a <= b0 else []
        elif k is DomainKind.WHISKERED_CELL:
            raw = []
            if y0 > 0:
                a0, b0 = max(1.0, 1 / y0), min(2.0, 2 / y0)
                raw = [(a0, b0)] if a0 < b0 else []
            raw += [(r[0], r[1]) for r in self.whisker.rectangles() if r[2] < y0 < r[3]]
        else:
            raw = [(1 / y0, 2 / y0)] if y0 > 0 else []
            rects = self.whisker.rectangles()
            n_lo, n_hi = _band_range(lo, hi)
            for n in range(n_lo, n_hi + 1):
                s = math.ldexp(1.0, n)
                q = y0 / s
                raw += [(r[0] * s, r[1] * s) for r in rects if r[2] < q < r[3]]
        return merge_intervals(raw, lo, hi)


def merge_intervals(raw: Iterable[tuple[float, float]], lo: float, hi: float) -> list[tuple[float, float]]:
    """Clip open intervals to ``(lo, hi)`` and merge the overlapping ones."""
    clipped = sorted((max(a, lo), min(b, hi)) for a, b in raw if min(b, hi) > max(a, lo))
    out: list[list[float]] = []
    for a, b in clipped:
        if out and a < out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def _band_range(lo: float, hi: float) -> tuple[int, int]:
    """Exponents ``n`` whose x-band ``[2**n, 2**(n+1))`` can meet ``(lo, hi)``."""
    if hi <= 0:
        return 0, -1
    n_lo = -ITERATION_CAP if lo <= 0 or not math.isfinite(lo) else max(-ITERATION_CAP, math.frexp(lo)[1] - 1)
    n_hi = ITERATION_CAP if not math.isfinite(hi) else min(ITERATION_CAP, math.frexp(hi)[1] - 1)
    return n_lo, n_hi


def _in_rects(rects, x, y) -> np.ndarray:
    res = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for x0, x1, y0, y1 in rects:
        res |= (x > x0) & (x < x1) & (y > y0) & (y < y1)
    return res


def contains(d: Domain, p: Point) -> bool:
    return d.contains(p)


def fundamental_cell(d: Domain) -> Domain:
    if d.kind is DomainKind.BAND_U:
        return Domain.fundamental(1.0)
    if d.kind is DomainKind.HYPERBOLA_V:
        return Domain.fundamental_tilde(1.0)
    if d.kind is DomainKind.WHISKERED:
        return Domain(DomainKind.WHISKERED_CELL, whisker=d.whisker)
    raise ValueError(f"no fundamental cell for domain kind {d.kind.value}")


def reduce_to_cell(d: Domain, p: Point) -> tuple[Point, int]:
    """Return ``(q, n)`` with ``q`` in the cell ``1 <= |x| < 2`` and ``T^n(q) = p``.

    Scaling is by exact powers of two, so ``iterate(T, q, n)`` reproduces ``p``
    bit for bit.  Under ``HyperbolaV`` points with ``x < 0`` land in the mirror
    cell, and points on the axis ``x = 0`` are not tiled by any cell.
    """
    if d.kind not in (DomainKind.BAND_U, DomainKind.HYPERBOLA_V, DomainKind.WHISKERED):
        raise ValueError(f"reduce_to_cell unsupported for {d.kind.value}")
    if not d.contains(p):
        raise DomainError(f"{p} is outside {d.kind.value}")
    if p.x == 0:
        raise DomainError("points on x = 0 are not covered by the T-images of a cell")
    _, e = math.frexp(abs(p.x))
    n = e - 1
    return Point(math.ldexp(p.x, -n), math.ldexp(p.y, n)), n


def sample_points(d: Domain, n: int, rng: np.random.Generator, max_power: int = 6) -> np.ndarray:
    """Draw ``n`` points of ``d`` as an ``(n, 2)`` array; unbounded domains are
    sampled over ``2**-max_power <= |x| <= 2**max_power``."""
    k = d.kind
    if k is DomainKind.FULL_PLANE:
        return rng.uniform(-10, 10, size=(n, 2))
    if k in (DomainKind.BAND_U, DomainKind.HYPERBOLA_V):
        x = np.exp2(rng.uniform(-max_power, max_power, n))
        if k is DomainKind.BAND_U:
            t = rng.uniform(1, 2, n)
        else:
            x *= rng.choice([-1.0, 1.0], n)
            t = rng.uniform(-1, 1, n)
        # keep strictly interior after rounding
        pts = np.column_stack([x, t / x])
        ok = d.contains_xy(pts[:, 0], pts[:, 1])
        return pts[ok] if ok.all() else np.vstack([pts[ok], sample_points(d, n - ok.sum(), rng, max_power)])
    if k is DomainKind.WHISKERED:
        spec = d.whisker
        ytop = max(r[3] for r in spec.rectangles())
        out = []
        cell = fundamental_cell(d)
        while sum(len(o) for o in out) < n:
            q = np.column_stack([rng.uniform(1, 2, 4 * n), rng.uniform(0.5, ytop, 4 * n)])
            q = q[cell.contains_xy(q[:, 0], q[:, 1]) & (q[:, 0] < 2)]
            out.append(q)
        q = np.vstack(out)[:n]
        m = rng.integers(-max_power, max_power + 1, n)
        return np.column_stack([np.ldexp(q[:, 0], m), np.ldexp(q[:, 1], -m)])
    if k in (DomainKind.FUNDAMENTAL_DA, DomainKind.FUNDAMENTAL_TILDE_DA):
        x = rng.uniform(d.a, 2 * d.a, n)
        t = rng.uniform(1, 2, n) if k is DomainKind.FUNDAMENTAL_DA else rng.uniform(-1, 1, n)
        return np.column_stack([x, t / x])
    raise ValueError(f"cannot sample {k.value}")


def invariance_check(d: Domain, m: PlaneMap, n_samples: int, rng: np.random.Generator | None = None) -> bool:
    """True iff every sampled point has its image and preimage under ``m`` in ``d``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    pts = sample_points(d, n_samples, rng)
    fx, fy = m.forward_xy(pts[:, 0], pts[:, 1])
    bx, by = m.inverse_xy(pts[:, 0], pts[:, 1])
    return bool(np.all(d.contains_xy(fx, fy)) and np.all(d.contains_xy(bx, by)))


@dataclass(frozen=True)
class BoundaryCurve:
    side: str
    parametrization: Curve


def _hyperbola(tval: float, x0: float, x1: float, window: Window, n: int) -> Curve | None:
    """Samples of ``x y = tval`` with ``x`` in ``[x0, x1]`` (one sign) inside the window."""
    _, _, ymin, ymax = window
    if x0 >= x1:
        return None
    if x0 > 0:
        xs = np.geomspace(x0, x1, n)
    else:
        xs = -np.geomspace(-x1, -x0, n)[::-1]
    ys = tval / xs
    keep = (ys >= ymin) & (ys <= ymax)
    if keep.sum() < 2:
        return None
    return Curve(np.column_stack([xs[keep], ys[keep]]))


def boundary_curves(d: Domain, window: Window, n: int = 400) -> list[BoundaryCurve]:
    """Sampled boundary arcs of ``d`` inside ``window`` (the whisker outline excluded)."""
    xmin, xmax, _, _ = window
    tiny = 1e-9
    out: list[BoundaryCurve] = []
    if d.kind in (DomainKind.BAND_U, DomainKind.WHISKERED):
        for tv, side in ((1.0, "tau=1"), (2.0, "tau=2")):
            c = _hyperbola(tv, max(xmin, tiny), xmax, window, n)
            if c is not None:
                out.append(BoundaryCurve(side, c))
    elif d.kind is DomainKind.HYPERBOLA_V:
        for tv, side in ((1.0, "tau=1"), (-1.0, "tau=-1")):
            for lo, hi in ((max(xmin, tiny), xmax), (xmin, min(xmax, -tiny))):
                c = _hyperbola(tv, lo, hi, window, n)
                if c is not None:
                    out.append(BoundaryCurve(side, c))
    return out


def region_polygon(d: Domain, window: Window, n: int = 2000):
    """Shapely geometry approximating ``d`` intersected with ``window``."""
    from shapely.geometry import Polygon, box
    from shapely.ops import unary_union

    xmin, xmax, ymin, ymax = window
    frame = box(xmin, ymin, xmax, ymax)
    span = max(xmax - xmin, ymax - ymin)
    cap = max(abs(ymin), abs(ymax)) + span
    k = d.kind
    if k is DomainKind.FULL_PLANE:
        return frame
    if k in (DomainKind.BAND_U, DomainKind.WHISKERED):
        x0 = max(xmin, 1.0 / cap if ymax > 0 else xmax)
        parts = []
        if x0 < xmax and ymax > 0:
            xs = np.geomspace(x0 / 2, xmax + span, n)
            top = np.minimum(2 / xs, cap)
            bot = np.minimum(1 / xs, cap)
            parts.append(Polygon(np.vstack([np.column_stack([xs, top]), np.column_stack([xs[::-1], bot[::-1]])])))
        if k is DomainKind.WHISKERED:
            rects = d.whisker.rectangles()
            nlo, nhi = _band_range(xmin, xmax)
            for m in range(nlo, nhi + 1):
                s = math.ldexp(1.0, m)
                parts += [box(r[0] * s, r[2] / s, r[1] * s, r[3] / s) for r in rects]
        return unary_union(parts).intersection(frame) if parts else Polygon()
    if k is DomainKind.HYPERBOLA_V:
        xs = np.union1d(np.linspace(xmin - span, xmax + span, n), [0.0])
        with np.errstate(divide="ignore"):
            top = np.minimum(1 / np.abs(xs), cap)
        return Polygon(np.vstack([np.column_stack([xs, top]), np.column_stack([xs[::-1], -top[::-1]])])).intersection(frame)
    raise ValueError(f"no region polygon for {k.value}")
