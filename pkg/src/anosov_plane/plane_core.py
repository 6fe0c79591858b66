"""Planar primitives and the two map families acting on them."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ITERATION_CAP",
    "IterationLimitError",
    "MapKind",
    "Point",
    "TangentVector",
    "PlaneMap",
    "Curve",
    "T",
    "apply_map",
    "apply_inverse",
    "differential",
    "iterate",
    "tau",
]

ITERATION_CAP = 64


class IterationLimitError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class TangentVector:
    base: Point
    dx: float
    dy: float

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)):
            raise ValueError("non-finite tangent vector components")

    @property
    def is_zero(self) -> bool:
        return self.dx == 0.0 and self.dy == 0.0

    def scaled(self, a: float) -> "TangentVector":
        return TangentVector(self.base, a * self.dx, a * self.dy)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        if other.base != self.base:
            raise ValueError("cannot add tangent vectors at different base points")
        return TangentVector(self.base, self.dx + other.dx, self.dy + other.dy)

    def dot(self, other: "TangentVector") -> float:
        return self.dx * other.dx + self.dy * other.dy


class MapKind(str, enum.Enum):
    LINEAR_HYPERBOLIC = "LinearHyperbolic"
    TRANSLATION = "Translation"


@dataclass(frozen=True)
class PlaneMap:
    """Either ``(x, y) -> (k x, y / k)`` with ``k > 1`` or ``(x, y) -> (x + d, y)``."""

    kind: MapKind
    parameter: float

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))
        if self.kind is MapKind.LINEAR_HYPERBOLIC and not self.parameter > 1:
            raise ValueError("expansion factor must exceed 1")
        if self.kind is MapKind.TRANSLATION and (self.parameter == 0 or not math.isfinite(self.parameter)):
            raise ValueError("translation displacement must be finite and non-zero")

    @classmethod
    def linear(cls, factor: float = 2.0) -> "PlaneMap":
        return cls(MapKind.LINEAR_HYPERBOLIC, factor)

    @classmethod
    def translation(cls, d: float = 1.0) -> "PlaneMap":
        return cls(MapKind.TRANSLATION, d)

    # Vectorised forms used by samplers and tracers.
    def forward_xy(self, x, y):
        if self.kind is MapKind.LINEAR_HYPERBOLIC:
            return x * self.parameter, y / self.parameter
        return x + self.parameter, y

    def inverse_xy(self, x, y):
        if self.kind is MapKind.LINEAR_HYPERBOLIC:
            return x / self.parameter, y * self.parameter
        return x - self.parameter, y

    def linear_part(self) -> np.ndarray:
        if self.kind is MapKind.LINEAR_HYPERBOLIC:
            return np.diag([self.parameter, 1.0 / self.parameter])
        return np.eye(2)


T = PlaneMap.linear(2.0)


def apply_map(m: PlaneMap, p: Point) -> Point:
    return Point(*m.forward_xy(p.x, p.y))


def apply_inverse(m: PlaneMap, p: Point) -> Point:
    return Point(*m.inverse_xy(p.x, p.y))


def differential(m: PlaneMap, v: TangentVector) -> TangentVector:
    if m.kind is MapKind.LINEAR_HYPERBOLIC:
        dx, dy = v.dx * m.parameter, v.dy / m.parameter
    else:
        dx, dy = v.dx, v.dy
    return TangentVector(apply_map(m, v.base), dx, dy)


def iterate(m: PlaneMap, p: Point, n: int, cap: int = ITERATION_CAP) -> Point:
    """Apply ``m`` ``n`` times; negative ``n`` applies the exact inverse."""
    if abs(n) > cap:
        raise IterationLimitError(f"|n|={abs(n)} exceeds iteration cap {cap}")
    x, y = p.x, p.y
    step = m.forward_xy if n >= 0 else m.inverse_xy
    for _ in range(abs(n)):
        x, y = step(x, y)
    return Point(x, y)


def tau(p: Point) -> float:
    """The T-invariant product ``x y``."""
    return p.x * p.y


@dataclass(frozen=True, eq=False)
class Curve:
    """An open polyline stored as an ``(n, 2)`` read-only array."""

    samples: np.ndarray
    closed: bool = False

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).reshape(-1, 2)
        if len(arr) < 2:
            raise ValueError("a curve needs at least two samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError("curve samples must be finite")
        if np.any(np.all(arr[1:] == arr[:-1], axis=1)):
            raise ValueError("consecutive curve samples must be distinct")
        if self.closed:
            raise ValueError("closed curves are not supported")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_points(cls, points) -> "Curve":
        return cls(np.array([[p.x, p.y] for p in points], dtype=float))

    @classmethod
    def segment(cls, a, b, n: int = 2) -> "Curve":
        a, b = np.asarray(tuple(a), float), np.asarray(tuple(b), float)
        t = np.linspace(0.0, 1.0, max(n, 2))[:, None]
        return cls(a + t * (b - a))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.samples]

    @property
    def xs(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.samples[:, 1]

    def refined(self, levels: int = 1) -> "Curve":
        """Insert midpoints ``levels`` times (each segment split into ``2**levels``)."""
        k = 2 ** levels
        a, b = self.samples[:-1], self.samples[1:]
        t = (np.arange(k) / k)[None, :, None]
        inner = (a[:, None, :] + t * (b - a)[:, None, :]).reshape(-1, 2)
        return Curve(np.vstack([inner, self.samples[-1:]]))

    def mapped(self, m: PlaneMap, inverse: bool = False) -> "Curve":
        f = m.inverse_xy if inverse else m.forward_xy
        x, y = f(self.xs, self.ys)
        return Curve(np.column_stack([x, y]))

    def euclidean_length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.samples, axis=0).T)))
