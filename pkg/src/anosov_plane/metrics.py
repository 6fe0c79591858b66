"""Riemannian metrics on the invariant domains and path length under them."""
from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import Domain, DomainError
from .plane_core import Curve, Point, TangentVector

__all__ = [
    "MetricForm",
    "Profile",
    "ThetaProfile",
    "FramePair",
    "MetricField",
    "LengthReport",
    "phi_band",
    "phi_hyp",
    "phi",
    "phi_antiderivative",
    "inner_product",
    "norm",
    "path_length",
    "lower_sum_bound",
    "frame_at",
    "MAX_REFINEMENT_LEVELS",
]

MAX_REFINEMENT_LEVELS = 20
_CHUNK = 1 << 22


class MetricForm(str, enum.Enum):
    EUCLIDEAN = "Euclidean"
    CONFORMAL = "Conformal"
    FRAME = "Frame"


class Profile(str, enum.Enum):
    BAND = "BandPhi"
    HYP = "HypPhi"


_PROFILE_INTERVAL = {Profile.BAND: (1.0, 2.0), Profile.HYP: (-1.0, 1.0)}
_PROFILE_MODE = {Profile.BAND: 1.5, Profile.HYP: 0.0}


def phi_band(t: float) -> float:
    """``1 / ((t - 1)(2 - t))`` on ``(1, 2)``."""
    if not 1 < t < 2:
        raise DomainError(f"phi_band needs 1 < t < 2, got {t}")
    return 1.0 / ((t - 1.0) * (2.0 - t))


def phi_hyp(t: float) -> float:
    """``2 / (1 - t**2)`` on ``(-1, 1)``."""
    if not -1 < t < 1:
        raise DomainError(f"phi_hyp needs |t| < 1, got {t}")
    return 2.0 / (1.0 - t * t)


def phi(profile: Profile, t):
    """Vectorised profile evaluation; no domain check."""
    t = np.asarray(t, dtype=float)
    if Profile(profile) is Profile.BAND:
        return 1.0 / ((t - 1.0) * (2.0 - t))
    return 2.0 / (1.0 - t * t)


def phi_antiderivative(profile: Profile, t: float) -> float:
    """Closed-form primitive used as an independent oracle for lengths."""
    if Profile(profile) is Profile.BAND:
        return math.log((t - 1.0) / (2.0 - t))
    return math.log((1.0 + t) / (1.0 - t))


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class ThetaProfile:
    """Nondecreasing rotation angle of the frame, ``theta(x + 1) = theta(x) + 2 pi``.

    ``knots`` list ``(x, theta)`` over one period ``[0, 1]``.  Equal neighbouring
    values give a plateau; otherwise the two knots are joined by a cubic Hermite
    ramp with zero end slopes, strictly increasing inside.
    """

    knots: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (0.1, 0.0),
        (0.2, math.pi / 2),
        (0.4, math.pi / 2),
        (0.6, 3 * math.pi / 2),
        (0.8, 3 * math.pi / 2),
        (0.9, 2 * math.pi),
        (1.0, 2 * math.pi),
    )

    def __post_init__(self):
        xs, vs = self._arrays()
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            raise ValueError("theta knots must increase from 0 to 1")
        if np.any(np.diff(vs) < 0) or not math.isclose(vs[-1] - vs[0], 2 * math.pi):
            raise ValueError("theta must be nondecreasing with total rise 2*pi")

    def _arrays(self):
        arr = np.array(self.knots, dtype=float)
        return arr[:, 0], arr[:, 1]

    def rising_intervals(self) -> list[tuple[float, float]]:
        xs, vs = self._arrays()
        return [(xs[i], xs[i + 1]) for i in range(len(xs) - 1) if vs[i + 1] > vs[i]]

    def plateaus(self) -> list[tuple[float, float, float]]:
        xs, vs = self._arrays()
        return [(xs[i], xs[i + 1], vs[i]) for i in range(len(xs) - 1) if vs[i + 1] == vs[i]]

    def scalar(self, x: float) -> float:
        """Pure-python evaluation for hot scalar loops (same values as ``__call__``)."""
        period = math.floor(x)
        u = x - period
        ks = self.knots
        i = min(max(bisect.bisect_right(ks, (u, math.inf)) - 1, 0), len(ks) - 2)
        (x0, v0), (x1, v1) = ks[i], ks[i + 1]
        if v0 == v1:
            val = v0
        else:
            val = v0 + (v1 - v0) * _smoothstep(min(max((u - x0) / (x1 - x0), 0.0), 1.0))
        return val + (ks[-1][1] - ks[0][1]) * period

    def __call__(self, x):
        xs, vs = self._arrays()
        x = np.asarray(x, dtype=float)
        period = np.floor(x)
        u = x - period
        i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(xs) - 2)
        x0, x1, v0, v1 = xs[i], xs[i + 1], vs[i], vs[i + 1]
        s = _smoothstep(np.clip((u - x0) / (x1 - x0), 0.0, 1.0))
        val = np.where(v0 == v1, v0, v0 + (v1 - v0) * s) + (vs[-1] - vs[0]) * period
        return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class FramePair:
    e_s: tuple[float, float]
    e_u: tuple[float, float]


def frame_at(theta: ThetaProfile, x: float) -> FramePair:
    th = theta(x)
    return FramePair((math.cos(th), math.sin(th)), (math.cos(th + math.pi / 2), math.sin(th + math.pi / 2)))


@dataclass(frozen=True)
class MetricField:
    form: MetricForm
    profile: Profile | None = None
    domain: Domain | None = None
    lam: float = 0.5
    theta: ThetaProfile = field(default_factory=ThetaProfile)

    def __post_init__(self):
        object.__setattr__(self, "form", MetricForm(self.form))
        if self.form is MetricForm.CONFORMAL:
            if self.profile is None or self.domain is None:
                raise ValueError("a conformal metric needs a profile and a domain")
            object.__setattr__(self, "profile", Profile(self.profile))
        if self.form is MetricForm.FRAME and not 0 < self.lam < 1:
            raise ValueError(f"frame metric needs 0 < lambda < 1, got {self.lam}")

    @classmethod
    def euclidean(cls) -> "MetricField":
        return cls(MetricForm.EUCLIDEAN)

    @classmethod
    def conformal(cls, profile: Profile, domain: Domain) -> "MetricField":
        return cls(MetricForm.CONFORMAL, Profile(profile), domain)

    @classmethod
    def frame(cls, lam: float = 0.5, theta: ThetaProfile | None = None) -> "MetricField":
        return cls(MetricForm.FRAME, lam=lam, theta=theta or ThetaProfile())

    def contains_xy(self, x, y) -> np.ndarray:
        if self.form is MetricForm.CONFORMAL:
            inside = self.domain.contains_xy(x, y)
            lo, hi = _PROFILE_INTERVAL[self.profile]
            t = np.asarray(x) * np.asarray(y)
            return inside & (t > lo) & (t < hi)
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)

    def scale_xy(self, x, y):
        """Conformal factor ``phi(x y)``; raises outside the domain."""
        if not np.all(self.contains_xy(x, y)):
            raise DomainError("metric evaluated outside its domain")
        return phi(self.profile, np.asarray(x) * np.asarray(y))

    def inner_xy(self, x, y, ux, uy, vx, vy):
        if self.form is MetricForm.EUCLIDEAN:
            return ux * vx + uy * vy
        if self.form is MetricForm.CONFORMAL:
            return self.scale_xy(x, y) ** 2 * (ux * vx + uy * vy)
        th = self.theta(x)
        cs, sn = np.cos(th), np.sin(th)
        cu, su = np.cos(th + np.pi / 2), np.sin(th + np.pi / 2)
        w = np.power(self.lam, 2 * np.asarray(x))
        return w * (ux * cs + uy * sn) * (vx * cs + vy * sn) + (ux * cu + uy * su) * (vx * cu + vy * su) / w

    def norm_xy(self, x, y, vx, vy):
        return np.sqrt(self.inner_xy(x, y, vx, vy, vx, vy))


def inner_product(g: MetricField, p: Point, u: TangentVector, v: TangentVector) -> float:
    if u.base != p or v.base != p:
        raise ValueError("tangent vectors must be based at p")
    if not bool(g.contains_xy(p.x, p.y)):
        raise DomainError(f"{p} is outside the metric's domain")
    return float(g.inner_xy(p.x, p.y, u.dx, u.dy, v.dx, v.dy))


def norm(g: MetricField, v: TangentVector) -> float:
    return math.sqrt(inner_product(g, v.base, v, v))


@dataclass(frozen=True)
class LengthReport:
    value: float
    refinement_levels: int
    last_delta: float
    truncated: bool = False


def _level_sum(g: MetricField, pts: np.ndarray, level: int) -> float:
    k = 1 << level
    a, d = pts[:-1], np.diff(pts, axis=0) / k
    offsets = (np.arange(k) + 0.5)
    per_chunk = max(1, _CHUNK // k)
    total = 0.0
    for s in range(0, len(a), per_chunk):
        aa, dd = a[s:s + per_chunk], d[s:s + per_chunk]
        mx = (aa[:, 0:1] + offsets[None, :] * dd[:, 0:1]).ravel()
        my = (aa[:, 1:2] + offsets[None, :] * dd[:, 1:2]).ravel()
        vx = np.repeat(dd[:, 0], k)
        vy = np.repeat(dd[:, 1], k)
        if not np.all(g.contains_xy(mx, my)):
            raise DomainError("curve leaves the metric's domain")
        total += float(np.sum(g.norm_xy(mx, my, vx, vy)))
    return total


def path_length(g: MetricField, c: Curve, tol: float = 1e-8, max_levels: int = MAX_REFINEMENT_LEVELS) -> LengthReport:
    """Length of the polyline ``c`` under ``g`` by dyadic composite midpoint sums.

    Each level splits every segment into ``2**level`` pieces; refinement stops
    once two successive levels agree to ``tol`` relatively.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts = c.samples
    if not np.all(g.contains_xy(pts[:, 0], pts[:, 1])):
        raise DomainError("curve touches or leaves the metric's domain")
    prev = _level_sum(g, pts, 0)
    delta = math.inf
    for level in range(1, max_levels + 1):
        cur = _level_sum(g, pts, level)
        delta = abs(cur - prev) / max(abs(cur), 1e-300)
        if delta < tol:
            return LengthReport(cur, level, delta)
        prev = cur
    return LengthReport(prev, max_levels, delta, truncated=True)


def lower_sum_bound(profile: Profile, alpha: float, beta: float, n: int, C: float) -> float:
    """``C`` times a lower Riemann sum of ``phi`` over ``[alpha, beta]`` with ``n`` cells.

    Each cell uses ``phi`` at the cell point nearest the profile's minimum, which
    is the left endpoint wherever ``phi`` is increasing.
    """
    profile = Profile(profile)
    lo, hi = _PROFILE_INTERVAL[profile]
    if not (lo < alpha < hi and lo < beta < hi):
        raise DomainError(f"[{alpha}, {beta}] leaves the profile interval ({lo}, {hi})")
    if n < 1 or not C > 0:
        raise ValueError("need n >= 1 and C > 0")
    a, b = min(alpha, beta), max(alpha, beta)
    delta = (b - a) / n
    left = a + delta * np.arange(n)
    right = left + delta
    m = _PROFILE_MODE[profile]
    t = np.clip(m, left, right)
    return float(C * np.sum(phi(profile, t)) * delta)
