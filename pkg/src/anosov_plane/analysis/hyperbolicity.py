"""Empirical check of uniform expansion and contraction under iteration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domains import DomainError, sample_points
from ..foliations import AnosovStructure
from ..plane_core import ITERATION_CAP, IterationLimitError


@dataclass(frozen=True)
class HyperbolicityReport:
    n_range: list[int]
    unstable_ratios: dict[int, tuple[float, float]]   # n -> (min, max) of |DT^n v| / |v|
    stable_ratios: dict[int, tuple[float, float]]
    fitted_lambda: float
    fitted_C: float
    verdict: str
    max_rel_error: float = math.nan                   # against the structure's own (C, lambda)
    step_ratios: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n_range": self.n_range,
                "unstable_ratios": {str(k): list(v) for k, v in self.unstable_ratios.items()},
                "stable_ratios": {str(k): list(v) for k, v in self.stable_ratios.items()},
                "fitted_lambda": self.fitted_lambda, "fitted_C": self.fitted_C,
                "max_rel_error": self.max_rel_error,
                "step_ratios": {k: list(v) for k, v in self.step_ratios.items()},
                "verdict": self.verdict}


def _base_points(s: AnosovStructure, n: int, rng: np.random.Generator) -> np.ndarray:
    if s.line_based:
        return sample_points(s.domain, n, rng)
    return np.column_stack([rng.uniform(-3.0, 3.0, n), rng.uniform(-3.0, 3.0, n)])


def _fit(ns: np.ndarray, logs: np.ndarray) -> tuple[float, float]:
    slope, icpt = np.polyfit(ns, logs, 1)
    return float(slope), float(icpt)


def hyperbolicity_probe(s: AnosovStructure, n_max: int = 20, n_samples: int = 1000,
                        rng: np.random.Generator | None = None, rtol: float = 1e-9) -> HyperbolicityReport:
    """Track unit stable and unstable vectors at sampled points for ``n = 1 .. n_max`` steps.

    A single pair ``(C, lambda)`` is fitted by least squares on the log ratios;
    the verdict passes when every ratio obeys the bounds with that pair, up to ``rtol``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_max > ITERATION_CAP:
        raise IterationLimitError(f"n_max={n_max} exceeds the cap {ITERATION_CAP}")
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = _base_points(s, n_samples, rng)
    A = s.map.linear_part()
    g = s.metric
    x, y = pts[:, 0], pts[:, 1]
    vecs = {}
    for name, chart in (("unstable", s.unstable_chart), ("stable", s.stable_chart)):
        ux, uy = chart.direction_xy(x)
        vecs[name] = (np.array(ux, dtype=float), np.array(uy, dtype=float))
    base = {k: g.norm_xy(x, y, ux, uy) for k, (ux, uy) in vecs.items()}
    ratios = {"unstable": [], "stable": []}
    cx, cy = x.copy(), y.copy()
    cur = {k: (ux.copy(), uy.copy()) for k, (ux, uy) in vecs.items()}
    for _ in range(n_max):
        cx, cy = s.map.forward_xy(cx, cy)
        if not np.all(s.domain.contains_xy(cx, cy)):
            raise DomainError("an iterate left the domain")
        for k, (ux, uy) in cur.items():
            ux, uy = A[0, 0] * ux + A[0, 1] * uy, A[1, 0] * ux + A[1, 1] * uy
            cur[k] = (ux, uy)
            ratios[k].append(g.norm_xy(cx, cy, ux, uy) / base[k])
    ns = np.arange(1, n_max + 1)
    r_u = np.array(ratios["unstable"])   # (n_max, n_samples)
    r_s = np.array(ratios["stable"])
    b_u, a_u = _fit(ns, np.log(r_u.min(axis=1)))
    b_s, a_s = _fit(ns, np.log(r_s.max(axis=1)))
    lam = math.exp(min(b_u, -b_s))
    # one constant for both inequalities: geometric mean of the two intercepts
    C = math.exp(0.5 * (a_u - a_s))
    ok = lam > 1
    ok = ok and bool(np.all(r_u >= C * lam ** ns[:, None] * (1 - rtol)))
    ok = ok and bool(np.all(r_s <= lam ** (-ns[:, None]) / C * (1 + rtol)))
    nominal_u = s.C * s.lam ** ns[:, None]
    nominal_s = s.lam ** (-ns[:, None]) / s.C
    err = max(float(np.max(np.abs(r_u / nominal_u - 1))), float(np.max(np.abs(r_s / nominal_s - 1))))
    step_u = r_u[1:] / r_u[:-1] if n_max > 1 else r_u
    step_s = r_s[1:] / r_s[:-1] if n_max > 1 else r_s
    return HyperbolicityReport(
        list(map(int, ns)),
        {int(n): (float(r_u[i].min()), float(r_u[i].max())) for i, n in enumerate(ns)},
        {int(n): (float(r_s[i].min()), float(r_s[i].max())) for i, n in enumerate(ns)},
        lam, C, "pass" if ok else "fail", err,
        {"unstable": (float(step_u.min()), float(step_u.max())),
         "stable": (float(step_s.min()), float(step_s.max()))})
