"""Numerical probes for metric completeness.

A probe walks a curve toward the edge of the domain (or off to infinity) and
reports how its length grows, alongside a rigorous lower Riemann sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domains import DomainError
from ..metrics import (MetricField, MetricForm, Profile, _PROFILE_INTERVAL, _PROFILE_MODE,
                       lower_sum_bound, path_length)
from ..plane_core import Curve

DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DivergenceReport:
    epsilons: list[float]
    lengths: list[float]
    certified_lower_bounds: list[float]
    verdict: str
    parameter_name: str = "epsilon"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"parameter_name": self.parameter_name, "epsilons": list(self.epsilons),
                "lengths": list(self.lengths), "certified_lower_bounds": list(self.certified_lower_bounds),
                "verdict": self.verdict, "details": dict(self.details)}


def _verdict(eps, lengths, bounds, min_slope, threshold) -> str:
    if len(eps) < 2:
        return INCONCLUSIVE
    if any(L < b for L, b in zip(lengths, bounds)):
        return INCONCLUSIVE
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        return INCONCLUSIVE
    # certified growth must keep pace with log(1/eps), otherwise the sums may converge
    logs = [-math.log(e) for e in eps]
    for i in range(1, len(eps)):
        if bounds[i] - bounds[i - 1] < min_slope * (logs[i] - logs[i - 1]):
            return INCONCLUSIVE
    if threshold is not None and bounds[-1] <= threshold:
        return INCONCLUSIVE
    return DIVERGES


def _sorted_eps(epsilons) -> list[float]:
    eps = sorted({float(e) for e in epsilons}, reverse=True)
    if not eps or eps[-1] <= 0:
        raise ValueError("epsilons must be positive")
    return eps


def tau_lipschitz_constant(c: Curve) -> float:
    """Largest C with euclidean length >= C |delta tau| on every segment of ``c``."""
    p = c.samples
    t = p[:, 0] * p[:, 1]
    ds = np.hypot(*np.diff(p, axis=0).T)
    dt = np.abs(np.diff(t))
    dt = np.where(dt == 0, np.nan, dt)
    return float(np.nanmin(ds / dt))


def fiber_curve(x0: float, t0: float, t1: float, per_decade: int = 48) -> Curve:
    """Vertical fiber through ``x = x0`` from ``tau = t0`` to ``tau = t1``, graded toward ``t1``."""
    if x0 == 0:
        raise DomainError("tau is constant on the fiber x = 0")
    # the boundary value the fiber is heading for
    sgn = 1.0 if t1 > t0 else -1.0
    edge = _nearest_edge(t1, sgn)
    d0, d1 = abs(edge - t0), abs(edge - t1)
    n = max(8, int(per_decade * math.log10(d0 / d1)) + 8)
    d = np.geomspace(d0, d1, n)
    t = edge - sgn * d
    t[0], t[-1] = t0, t1
    return Curve(np.column_stack([np.full(n, x0), t / x0]))


def _nearest_edge(t1: float, sgn: float) -> float:
    for lo, hi in _PROFILE_INTERVAL.values():
        if lo < t1 < hi:
            return hi if sgn > 0 else lo
    return round(t1)


def completeness_probe(metric: MetricField, x0: float, epsilons, side: str = "upper",
                       tau_start: float | None = None, tol: float = 1e-10, n_lower: int | None = None,
                       min_slope: float = 0.05, threshold: float | None = None) -> DivergenceReport:
    """Length of the fiber ``x = x0`` as ``tau`` approaches the upper or lower boundary value.

    ``epsilons`` are distances from the boundary value in the ``tau`` coordinate.
    """
    if metric.form is not MetricForm.CONFORMAL:
        raise ValueError("fiber probes need a conformal metric")
    lo, hi = _PROFILE_INTERVAL[metric.profile]
    t0 = _PROFILE_MODE[metric.profile] if tau_start is None else float(tau_start)
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    if not lo < t0 < hi or not bool(metric.contains_xy(x0, t0 / x0)):
        raise DomainError(f"fiber start (x0={x0}, tau={t0}) is outside the domain")
    eps = _sorted_eps(epsilons)
    lengths, bounds = [], []
    for e in eps:
        t1 = hi - e if side == "upper" else lo + e
        if not (t1 > t0 if side == "upper" else t1 < t0):
            raise ValueError(f"epsilon {e} does not lie beyond the starting value")
        c = fiber_curve(x0, t0, t1)
        if not np.all(metric.contains_xy(c.xs, c.ys)):
            raise DomainError("fiber leaves the domain before reaching the boundary")
        lengths.append(path_length(metric, c, tol=tol).value)
        C = tau_lipschitz_constant(c)
        # cells fine enough to resolve the last stretch before the boundary
        n = n_lower or int(min(1 << 22, max(4096, 4 * abs(t1 - t0) / e)))
        bounds.append(lower_sum_bound(metric.profile, t0, t1, n, C))
    verdict = _verdict(eps, lengths, bounds, min_slope, threshold)
    return DivergenceReport(eps, lengths, bounds, verdict, "epsilon",
                            {"x0": x0, "tau_start": t0, "side": side, "profile": metric.profile.value})


def bilipschitz_constant(profile: Profile, a: float = 1.0, n: int = 2001) -> float:
    """Numerical ``1 / max |grad tau|`` over the (bounded) fundamental cell of parameter ``a``."""
    lo, hi = _PROFILE_INTERVAL[Profile(profile)]
    xs = np.linspace(a, 2 * a, n)
    # |grad tau| = |(y, x)|, maximal where |y| is largest, i.e. on the outer boundary curve
    tmax = max(abs(lo), abs(hi))
    return float(1.0 / np.max(np.hypot(xs, tmax / xs)))


def frame_completeness_probe(metric: MetricField, reaches, y0: float = 0.0, tol: float = 1e-10,
                             min_slope: float = 0.05) -> dict[str, DivergenceReport]:
    """Horizontal paths from ``(0, y0)`` out to ``x = +X`` and ``x = -X`` for each reach ``X``.

    The certificates count plateaus of ``theta`` where the vector a path must
    traverse against is horizontal and weighted by a factor of at least one.
    """
    if metric.form is not MetricForm.FRAME:
        raise ValueError("needs a frame metric")
    X = sorted({float(r) for r in reaches})
    if not X or X[0] <= 0:
        raise ValueError("reaches must be positive")
    out = {}
    for name, sgn, mod in (("right", 1.0, math.pi / 2), ("left", -1.0, 0.0)):
        lengths, bounds = [], []
        for r in X:
            n = max(64, int(400 * r))
            c = Curve(np.column_stack([np.linspace(0.0, sgn * r, n), np.full(n, y0)]))
            lengths.append(path_length(metric, c, tol=tol).value)
            lo, hi = (0.0, r) if sgn > 0 else (-r, 0.0)
            bounds.append(_merged_plateau_length(metric.theta, lo, hi, mod))
        eps = [1.0 / r for r in X]
        out[name] = DivergenceReport(eps, lengths, bounds, _verdict(eps, lengths, bounds, min_slope, None),
                                     "inverse_reach", {"direction": name, "reaches": X, "y0": y0})
    return out


def _merged_plateau_length(theta, lo, hi, mod) -> float:
    ivs = []
    for k in range(math.floor(lo) - 1, math.ceil(hi) + 1):
        for x0, x1, v in theta.plateaus():
            if abs(math.remainder(v - mod, math.pi)) < 1e-12:
                ivs.append((x0 + k, x1 + k))
    ivs.sort()
    merged = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return float(sum(max(0.0, min(b, hi) - max(a, lo)) for a, b in merged))
