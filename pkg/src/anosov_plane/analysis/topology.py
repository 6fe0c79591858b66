"""Model flows with Reeb components, prolongational limit sets, and the
quasi-parallelism obstruction.

Flows have unit speed.  Orientation of a vertical separatrix is +1 when its
flow points up and -1 when it points down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ..domains import Window
from ..metrics import ThetaProfile
from ..plane_core import Point

FORWARD, BACKWARD = "forward", "backward"
REEB, PARALLEL = "reeb", "parallel"


class UnknownFlowError(KeyError):
    pass


@dataclass(frozen=True)
class Separatrix:
    name: str
    x: float
    orientation: int
    deltas: tuple[float, ...] | None = None   # overrides the flow default


@dataclass(frozen=True)
class Region:
    name: str
    lo: float
    hi: float
    kind: str


@dataclass(frozen=True)
class Flow:
    name: str
    field: Callable          # (x, y) arrays -> (u, v) unit vectors
    window: Window
    separatrices: tuple[Separatrix, ...]
    regions: tuple[Region, ...]
    # orbits near a Reeb edge peel off after a depth of order 1/delta (sec-type
    # leaves) or log(1/delta) (frame leaves); the defaults are sized accordingly
    deltas: tuple[float, ...] = (0.02, 0.01, 0.005)
    t_max: float = 1500.0

    def region_at(self, x: float) -> Region:
        for r in self.regions:
            if r.lo < x < r.hi:
                return r
        raise ValueError(f"x={x} lies on a separatrix")


def _unit(u, v):
    r = np.hypot(u, v)
    return u / r, v / r


def _reeb1(x, y):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < math.pi / 2
    # interior: tangent of y = c + sec x run left to right, scaled by cos^2 x
    u = np.where(inside, np.cos(x) ** 2, 0.0)
    v = np.where(inside, np.sin(x), np.sign(x))
    return _unit(u, v)


def _reeb2(opposed: bool):
    def f(x, y):
        x = np.asarray(x, dtype=float)
        a = (x > -1) & (x < 0)
        b = (x > 0) & (x < 1)
        s = np.sin(np.pi * x)
        cs = np.cos(np.pi * x)
        # (a): y = k + 1/sin(pi (x+1)), run left to right
        ua, va = s ** 2, np.pi * cs
        if opposed:
            # (b) flipped: y = k - 1/sin(pi x), run left to right
            ub, vb = s ** 2, np.pi * cs
        else:
            # (b): y = k + 1/sin(pi x), run right to left
            ub, vb = -s ** 2, np.pi * cs
        u = np.where(a, ua, np.where(b, ub, 0.0))
        v = np.where(a, va, np.where(b, vb, np.where(x == 0, 1.0, -1.0)))
        return _unit(u, v)
    return f


def _frame_unstable(theta: ThetaProfile):
    def f(x, y):
        x = np.asarray(x, dtype=float)
        th = theta(x) + np.pi / 2
        # the leaf at x = 1/2 repels at rate theta'; rounding in cos would peel it off
        u = np.where(np.mod(x, 1.0) == 0.5, 0.0, np.cos(th))
        return u, np.sin(th)
    return f


def _build_flows() -> dict[str, Flow]:
    h = math.pi / 2
    inf = math.inf
    reeb1 = Flow("reeb1", _reeb1, (-3.0, 3.0, -3.0, 3.0),
                 (Separatrix("left-edge", -h, -1), Separatrix("right-edge", h, 1)),
                 (Region("b", -inf, -h, PARALLEL), Region("a", -h, h, REEB), Region("c", h, inf, PARALLEL)))
    seps2 = (Separatrix("a-left", -1.0, -1), Separatrix("c", 0.0, 1), Separatrix("b-right", 1.0, -1))
    regs2 = (Region("outer-left", -inf, -1.0, PARALLEL), Region("a", -1.0, 0.0, REEB),
             Region("b", 0.0, 1.0, REEB), Region("outer-right", 1.0, inf, PARALLEL))
    win2 = (-2.0, 2.0, -2.5, 2.5)
    same = Flow("reeb2-same-orientation", _reeb2(False), win2, seps2, regs2)
    opp = Flow("reeb2-opposite", _reeb2(True), win2, seps2, regs2)
    th = ThetaProfile()
    frame = Flow("frame-unstable", _frame_unstable(th), (-0.3, 1.3, -1.5, 2.5),
                 (Separatrix("x=0.1", 0.1, 1, (0.02, 0.01, 0.005)), Separatrix("x=0.5", 0.5, -1),
                  Separatrix("x=0.9", 0.9, 1, (0.02, 0.01, 0.005))),
                 (Region("strip-0", -0.1, 0.1, PARALLEL), Region("u-1", 0.1, 0.5, REEB),
                  Region("u-2", 0.5, 0.9, REEB), Region("strip-1", 0.9, 1.1, PARALLEL)),
                 deltas=(1e-2, 1e-4, 1e-6), t_max=12.0)
    return {f.name: f for f in (reeb1, same, opp, frame)}


FLOWS = _build_flows()


def get_flow(name: str) -> Flow:
    try:
        return FLOWS[name]
    except KeyError:
        raise UnknownFlowError(f"unknown flow {name!r}; choose from {sorted(FLOWS)}") from None


@dataclass(frozen=True)
class ProlongationalSet:
    base: Point
    direction: str
    samples: np.ndarray                  # (k, 2) cell centres approximating J(p)
    deltas: tuple[float, ...]
    grid_tol: float
    window: Window
    # (delta, start point, time, reached point), one witness per delta
    witnesses: tuple[tuple[float, Point, float, Point], ...] = field(default=())

    @property
    def empty(self) -> bool:
        return len(self.samples) == 0

    def near_line(self, x0: float, tol: float | None = None) -> np.ndarray:
        tol = self.grid_tol if tol is None else tol
        return np.abs(self.samples[:, 0] - x0) <= tol

    def to_dict(self) -> dict:
        return {"base": [self.base.x, self.base.y], "direction": self.direction,
                "n_samples": int(len(self.samples)), "samples": self.samples.tolist(),
                "deltas": list(self.deltas), "grid_tol": self.grid_tol, "window": list(self.window),
                "witnesses": [{"delta": d, "start": [a.x, a.y], "time": t, "end": [b.x, b.y]}
                              for d, a, t, b in self.witnesses]}


def _net(p: Point, delta: float, n: int, side: str | None) -> np.ndarray:
    if side is None:
        xs = np.linspace(p.x - delta, p.x + delta, n)
    elif side == "left":
        xs = p.x - delta * np.arange(1, n + 1) / n
    elif side == "right":
        xs = p.x + delta * np.arange(1, n + 1) / n
    else:
        raise ValueError("side must be None, 'left' or 'right'")
    ys = np.linspace(p.y - delta, p.y + delta, n)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def _integrate(flow: Flow, starts: np.ndarray, t_max: float, dt: float, sign: float) -> tuple[np.ndarray, np.ndarray]:
    m = len(starts)

    def rhs(t, z):
        u, v = flow.field(z[:m], z[m:])
        return sign * np.concatenate([u, v])

    ts = np.arange(0.0, t_max + dt / 2, dt)
    sol = solve_ivp(rhs, (0.0, ts[-1]), np.concatenate([starts[:, 0], starts[:, 1]]), method="RK45",
                    t_eval=ts, rtol=1e-9, atol=1e-11, max_step=1.0)
    if not sol.success:  # pragma: no cover
        raise RuntimeError(sol.message)
    return sol.t, sol.y.reshape(2, m, -1)   # (2, m, len(ts))


def _cells(window: Window, tol: float) -> tuple[int, int]:
    xmin, xmax, ymin, ymax = window
    return math.ceil((ymax - ymin) / tol), math.ceil((xmax - xmin) / tol)


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:] |= mask[:-1]
    out[:-1] |= mask[1:]
    o2 = out.copy()
    o2[:, 1:] |= out[:, :-1]
    o2[:, :-1] |= out[:, 1:]
    return o2


def prolongational_limit(flow: Flow | str, p: Point, direction: str = FORWARD, deltas=None,
                         t_max: float | None = None, window: Window | None = None, grid_tol: float = 0.05,
                         net: int = 5, side: str | None = None) -> ProlongationalSet:
    """Approximate ``J_+(p)`` or ``J_-(p)`` inside ``window``.

    For each delta, orbits from a delta-net about ``p`` are followed for time
    ``t_max``.  Their visits to the window, minus the neighbourhood of ``p``'s
    own semi-orbit (these flows have no recurrence), form a set of grid cells;
    cells present for every delta (up to one cell) are returned.  ``side``
    restricts the net to one side of the vertical through ``p``.
    """
    flow = get_flow(flow) if isinstance(flow, str) else flow
    if direction not in (FORWARD, BACKWARD):
        raise ValueError("direction must be 'forward' or 'backward'")
    deltas = tuple(sorted((float(d) for d in (deltas or flow.deltas)), reverse=True))
    t_max = float(flow.t_max if t_max is None else t_max)
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if not deltas or deltas[-1] <= 0:
        raise ValueError("deltas must be positive")
    window = tuple(window or flow.window)
    xmin, xmax, ymin, ymax = window
    ny, nx = _cells(window, grid_tol)
    sign = 1.0 if direction == FORWARD else -1.0
    dt = grid_tol / 2
    stable = None
    per_delta = []
    for d in deltas:
        starts = np.vstack([[p.x, p.y], _net(p, d, net, side)])
        ts, Z = _integrate(flow, starts, t_max, dt, sign)
        X, Y = Z[0], Z[1]
        ins = (X >= xmin) & (X < xmax) & (Y >= ymin) & (Y < ymax)
        I = np.clip(((Y - ymin) / grid_tol).astype(int), 0, ny - 1)
        J = np.clip(((X - xmin) / grid_tol).astype(int), 0, nx - 1)
        own = np.zeros((ny, nx), dtype=bool)
        own[I[0][ins[0]], J[0][ins[0]]] = True
        excluded = _dilate(own)
        hit = np.zeros((ny, nx), dtype=bool)
        first = np.full((ny, nx, 2), -1, dtype=int)   # (trajectory, time index) of first visit
        for k in range(1, len(starts)):
            sel = ins[k] & ~excluded[I[k], J[k]]
            idx = np.nonzero(sel)[0]
            if len(idx) == 0:
                continue
            ci, cj = I[k][idx], J[k][idx]
            new = ~hit[ci, cj]
            # keep the first time each cell is met by this trajectory
            _, u = np.unique(ci[new] * nx + cj[new], return_index=True)
            first[ci[new][u], cj[new][u]] = np.column_stack([np.full(len(u), k), idx[new][u]])
            hit[ci, cj] = True
        per_delta.append((d, starts, ts, X, Y, hit, first))
        stable = hit.copy() if stable is None else stable & _dilate(hit)
    final = stable & per_delta[-1][5]
    ii, jj = np.nonzero(final)
    samples = np.column_stack([xmin + (jj + 0.5) * grid_tol, ymin + (ii + 0.5) * grid_tol])
    witnesses = []
    for d, starts, ts, X, Y, hit, first in per_delta:
        pick = first[hit & _dilate(final)]
        if len(pick):
            k, t = max(map(tuple, pick), key=lambda c: c[1])
            witnesses.append((d, Point(float(starts[k, 0]), float(starts[k, 1])), float(sign * ts[t]),
                              Point(float(X[k, t]), float(Y[k, t]))))
    return ProlongationalSet(p, direction, samples, deltas, grid_tol, window, tuple(witnesses))


@dataclass(frozen=True)
class ReebGraph:
    regions: dict[str, str]                       # name -> reeb | parallel
    separatrices: dict[str, int]                  # name -> orientation (+1 up, -1 down)
    adjacency: dict[str, tuple[str, str]]         # separatrix -> (left region, right region)
    limit_relations: tuple[tuple[str, str, str, str], ...]  # (source, target, sense, via region)

    def validate(self) -> "ReebGraph":
        for r, kind in self.regions.items():
            if kind not in (REEB, PARALLEL):
                raise ValueError(f"region {r!r} has unknown kind {kind!r}")
        for s, o in self.separatrices.items():
            if o not in (1, -1):
                raise ValueError(f"separatrix {s!r} needs orientation +1 or -1")
            if s not in self.adjacency:
                raise ValueError(f"separatrix {s!r} has no adjacency")
        sides: dict[str, list] = {}
        for s, (left, right) in self.adjacency.items():
            if s not in self.separatrices:
                raise ValueError(f"adjacency names unknown separatrix {s!r}")
            for r in (left, right):
                if r not in self.regions:
                    raise ValueError(f"adjacency names unknown region {r!r}")
            if left == right:
                raise ValueError(f"separatrix {s!r} must separate two regions")
            sides.setdefault(left, []).append(("right", s))
            sides.setdefault(right, []).append(("left", s))
        # a strip region has at most one separatrix on each of its sides
        for r, lst in sides.items():
            tags = [t for t, _ in lst]
            if len(tags) != len(set(tags)):
                raise ValueError(f"region {r!r} is bounded twice on the same side")
        for src, tgt, sense, via in self.limit_relations:
            if src not in self.separatrices or tgt not in self.separatrices:
                raise ValueError(f"limit relation names unknown separatrix ({src!r}, {tgt!r})")
            if sense not in (FORWARD, BACKWARD):
                raise ValueError(f"unknown sense {sense!r}")
            if via not in self.adjacency[src] or via not in self.adjacency[tgt]:
                raise ValueError(f"relation {src}->{tgt} must pass through a region bounding both")
        return self

    def to_dict(self) -> dict:
        return {"regions": dict(self.regions), "separatrices": dict(self.separatrices),
                "adjacency": {k: list(v) for k, v in self.adjacency.items()},
                "limit_relations": [list(r) for r in self.limit_relations]}


def quasi_parallel_obstruction(g: ReebGraph) -> bool:
    """True when one separatrix has, in a single sense, prolongational limits
    reached through two distinct Reeb regions (one on each side)."""
    g.validate()
    for s in g.separatrices:
        for sense in (FORWARD, BACKWARD):
            via = {r for src, _, sn, r in g.limit_relations if src == s and sn == sense and g.regions[r] == REEB}
            if len(via) >= 2:
                return True
    return False


def _skeleton(flow: Flow) -> tuple[dict, dict, dict]:
    regions = {r.name: r.kind for r in flow.regions}
    seps = {s.name: s.orientation for s in flow.separatrices}
    adj = {s.name: (flow.region_at(s.x - 1e-9).name, flow.region_at(s.x + 1e-9).name) for s in flow.separatrices}
    return regions, seps, adj


def encoded_graph(name: str) -> ReebGraph:
    """Hand-encoded graphs of the built-in flows."""
    flow = get_flow(name)
    regions, seps, adj = _skeleton(flow)
    rel = {
        "reeb1": (("left-edge", "right-edge", FORWARD, "a"), ("right-edge", "left-edge", BACKWARD, "a")),
        "reeb2-same-orientation": (("a-left", "c", FORWARD, "a"), ("c", "a-left", BACKWARD, "a"),
                                   ("b-right", "c", FORWARD, "b"), ("c", "b-right", BACKWARD, "b")),
        "reeb2-opposite": (("a-left", "c", FORWARD, "a"), ("c", "a-left", BACKWARD, "a"),
                           ("c", "b-right", FORWARD, "b"), ("b-right", "c", BACKWARD, "b")),
        "frame-unstable": (("x=0.5", "x=0.1", FORWARD, "u-1"), ("x=0.5", "x=0.9", FORWARD, "u-2"),
                           ("x=0.1", "x=0.5", BACKWARD, "u-1"), ("x=0.9", "x=0.5", BACKWARD, "u-2")),
    }[flow.name]
    return ReebGraph(regions, seps, adj, rel).validate()


def derive_reeb_graph(flow: Flow | str, y0: float = 0.0, min_cells: int = 3, **kw) -> ReebGraph:
    """Build the graph by computing one-sided prolongational limits at ``(x_s, y0)``
    on every separatrix and recording which other separatrices they cluster on."""
    flow = get_flow(flow) if isinstance(flow, str) else flow
    regions, seps, adj = _skeleton(flow)
    tol = kw.get("grid_tol", 0.05)
    rel = []
    for s in flow.separatrices:
        for side, region in zip(("left", "right"), adj[s.name]):
            if regions[region] != REEB:
                continue
            for sense in (FORWARD, BACKWARD):
                opts = dict(kw)
                if s.deltas and "deltas" not in opts:
                    opts["deltas"] = s.deltas
                J = prolongational_limit(flow, Point(s.x, y0), sense, side=side, **opts)
                for t in flow.separatrices:
                    if t.name != s.name and region in adj[t.name] and int(J.near_line(t.x, tol).sum()) >= min_cells:
                        rel.append((s.name, t.name, sense, region))
    return ReebGraph(regions, seps, adj, tuple(rel)).validate()
