"""Leaf-chain accessibility on a uniform grid, and the whisker lower bound.

The grid occupies a cell when its centre lies in the domain.  Along each
row (and column) consecutive occupied cells form a run, which stands in for a
horizontal (vertical) leaf segment; one sweep adds every run touching the
reachable set.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..domains import DomainError, Window, WhiskerSpec, WhiskerSpecError
from ..foliations import AnosovStructure
from ..plane_core import Point

DEFAULT_LEVEL_CAP = 64


def _resolution(res) -> tuple[int, int]:
    nx, ny = (res, res) if isinstance(res, int) else (int(res[0]), int(res[1]))
    if nx < 1 or ny < 1:
        raise ValueError("grid resolution must be positive")
    return nx, ny


def _run_labels(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label maximal runs of True along each row; 0 marks empty cells."""
    prev = np.zeros_like(mask)
    prev[:, 1:] = mask[:, :-1]
    starts = mask & ~prev
    labels = np.cumsum(starts.ravel()).reshape(mask.shape)
    return np.where(mask, labels, 0), int(starts.sum())


@dataclass
class ReachabilityGrid:
    window: Window
    shape: tuple[int, int]          # (ny, nx)
    mask: np.ndarray                # cell centres inside the domain
    row_labels: np.ndarray          # horizontal (unstable) runs
    col_labels: np.ndarray          # vertical (stable) runs
    seed: tuple[int, int]           # (row, col)
    levels: list[np.ndarray]        # cumulative occupancy after n sweeps

    @property
    def cell_size(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.window
        return (xmax - xmin) / self.shape[1], (ymax - ymin) / self.shape[0]

    def cell_of(self, p: Point) -> tuple[int, int]:
        xmin, xmax, ymin, ymax = self.window
        dx, dy = self.cell_size
        i = math.floor((p.y - ymin) / dy)
        j = math.floor((p.x - xmin) / dx)
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise DomainError(f"{p} is outside the grid window")
        return i, j

    def center(self, cell: tuple[int, int]) -> Point:
        dx, dy = self.cell_size
        return Point(self.window[0] + (cell[1] + 0.5) * dx, self.window[2] + (cell[0] + 0.5) * dy)

    def level_map(self) -> np.ndarray:
        """First sweep count at which each cell is reached, -1 if never."""
        out = np.full(self.shape, -1, dtype=int)
        for n in range(len(self.levels) - 1, -1, -1):
            out[self.levels[n]] = n
        return out

    def level_of(self, p: Point) -> int | None:
        i, j = self.cell_of(p)
        for n, occ in enumerate(self.levels):
            if occ[i, j]:
                return n
        return None

    def sweep(self) -> bool:
        """Add one level; returns False once the reachable set stops growing."""
        occ = self.levels[-1]
        hit_r = np.zeros(self.row_labels.max() + 1, dtype=bool)
        hit_c = np.zeros(self.col_labels.max() + 1, dtype=bool)
        hit_r[self.row_labels[occ]] = True
        hit_c[self.col_labels[occ]] = True
        hit_r[0] = hit_c[0] = False
        new = occ | hit_r[self.row_labels] | hit_c[self.col_labels]
        self.levels.append(new)
        return bool(np.any(new != occ))


def domain_mask(s: AnosovStructure, window: Window, resolution) -> np.ndarray:
    nx, ny = _resolution(resolution)
    xmin, xmax, ymin, ymax = window
    if not (xmin < xmax and ymin < ymax):
        raise ValueError("degenerate window")
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    return s.domain.contains_xy(X, Y)


def _grid(s: AnosovStructure, window: Window, resolution, mask=None) -> ReachabilityGrid:
    if not s.line_based:
        raise ValueError("grid reachability needs line-based (vertical/horizontal) charts")
    mask = domain_mask(s, window, resolution) if mask is None else mask
    rows, _ = _run_labels(mask)
    cols_t, _ = _run_labels(mask.T)
    return ReachabilityGrid(tuple(window), mask.shape, mask, rows, cols_t.T, (0, 0), [])


def _seeded(base: ReachabilityGrid, p: Point) -> ReachabilityGrid:
    g = ReachabilityGrid(base.window, base.shape, base.mask, base.row_labels, base.col_labels, (0, 0), [])
    cell = g.cell_of(p)
    if not g.mask[cell]:
        raise DomainError(f"{p} does not fall in a domain cell of the grid")
    g.seed = cell
    occ = np.zeros(g.shape, dtype=bool)
    occ[cell] = True
    g.levels = [occ]
    return g


def reachable_sets(s: AnosovStructure, p: Point, window: Window, resolution=400,
                   n_max: int = 8) -> ReachabilityGrid:
    """Levels ``R_0 = {p}, R_1, ..., R_n`` of the leaf-sweep, stopping early once stable."""
    if not s.domain.contains(p):
        raise DomainError(f"{p} is outside the domain")
    g = _seeded(_grid(s, window, resolution), p)
    for _ in range(n_max):
        if not g.sweep():
            g.levels.pop()
            break
    return g


@dataclass(frozen=True)
class AccessChain:
    points: list[Point]
    arc_types: list[str]      # "stable" (vertical) or "unstable" (horizontal), one per arc
    resolution: tuple[int, int]

    @property
    def length(self) -> int:
        return len(self.arc_types)


def _backtrack(g: ReachabilityGrid, target: tuple[int, int], level: int) -> AccessChain:
    cells, arcs = [target], []
    cur = target
    for n in range(level, 0, -1):
        prev_occ = g.levels[n - 1]
        found = None
        for labels, kind in ((g.row_labels, "unstable"), (g.col_labels, "stable")):
            lab = labels[cur]
            if lab == 0:
                continue
            cand = np.argwhere(prev_occ & (labels == lab))
            if len(cand):
                d = np.abs(cand - np.array(cur)).sum(axis=1)
                found = (tuple(int(v) for v in cand[int(np.argmin(d))]), kind)
                break
        if found is None:  # pragma: no cover - levels are built from these runs
            raise RuntimeError("broken reachability levels")
        cur = found[0]
        cells.append(cur)
        arcs.append(found[1])
    cells.reverse()
    arcs.reverse()
    return AccessChain([g.center(c) for c in cells], arcs, (g.shape[1], g.shape[0]))


def accessibility(s: AnosovStructure, p: Point, q: Point, window: Window, resolution=400,
                  n_max: int = 16) -> AccessChain | None:
    """Shortest grid chain of alternating leaf arcs from ``p`` to ``q``, or ``None``.

    On the grid this is an upper bound for the true minimal number of arcs.
    """
    for pt in (p, q):
        if not s.domain.contains(pt):
            raise DomainError(f"{pt} is outside the domain")
    g = _seeded(_grid(s, window, resolution), p)
    tgt = g.cell_of(q)
    if not g.mask[tgt]:
        raise DomainError(f"{q} does not fall in a domain cell of the grid")
    for n in range(n_max + 1):
        if g.levels[n][tgt]:
            return _backtrack(g, tgt, n)
        if n < n_max and not g.sweep():
            return None
    return None


def whisker_lower_bound(spec: WhiskerSpec, k: int) -> int:
    """Arcs needed to join ``p_0`` to ``p_k``; checks the geometric hypotheses first.

    The height ``c`` clears every horizontal bar, so the horizontal leaf through
    a marked point stays inside its own vertical bar; the only route from
    bar ``V_j`` to ``V_{j+1}`` is through ``H_j``, which costs two more arcs.
    """
    from ..domains import Domain

    spec.validate()
    n = spec.n_extrema
    if not 1 <= k <= n:
        raise WhiskerSpecError(f"k must lie in 1..{n}")
    w, c = spec.width, spec.c
    if any(abs(y - c) <= spec.eps for y in spec.extrema_y) or spec.eps <= w:
        raise WhiskerSpecError("eps clearance violated")
    cell = Domain(kind="WhiskeredCell", whisker=spec)
    comps = cell.horizontal_intervals(c, 1.0, 2.0)
    where = []
    for p in spec.marked_points():
        idx = [i for i, (lo, hi) in enumerate(comps) if lo < p.x < hi]
        if len(idx) != 1:
            raise WhiskerSpecError(f"marked point {p} is not on the horizontal section")
        where.append(idx[0])
    if len(set(where)) != len(where):
        raise WhiskerSpecError("two marked points share a horizontal component")
    return 2 * k + 1


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("ANOSOV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ANOSOV_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class DegreeEstimate:
    max_observed: int
    saturated: bool           # some pair was not joined within n_max arcs
    n_pairs: int
    histogram: dict[int, int]


def degree_of_inaccessibility(s: AnosovStructure, window: Window, resolution=200, n_pairs: int = 1000,
                              n_max: int = 12, rng: np.random.Generator | None = None,
                              extra_points=(), workers: int | None = None) -> DegreeEstimate:
    """Maximum grid chain length over sampled pairs inside ``window``.

    Pairs are drawn uniformly from the domain cells; ``extra_points`` are added
    and every pair among them is included too.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    base = _grid(s, window, resolution)
    cells = np.argwhere(base.mask)
    if len(cells) == 0:
        raise DomainError("window holds no domain cells")
    pick = cells[rng.integers(0, len(cells), size=(n_pairs, 2))]
    pairs = [(base.center(tuple(a)), base.center(tuple(b))) for a, b in pick]
    extra = list(extra_points)
    pairs += [(p, q) for i, p in enumerate(extra) for q in extra[i + 1:]]

    def one(pq):
        p, q = pq
        g = _seeded(base, p)
        tgt = g.cell_of(q)
        if not g.mask[tgt]:
            raise DomainError(f"{q} does not fall in a domain cell of the grid")
        for n in range(n_max + 1):
            if g.levels[n][tgt]:
                return n
            if n < n_max and not g.sweep():
                break
        return None

    with ThreadPoolExecutor(_threads(workers)) as ex:
        results = list(ex.map(one, pairs))
    hist: dict[int, int] = {}
    for r in results:
        key = -1 if r is None else r
        hist[key] = hist.get(key, 0) + 1
    found = [r for r in results if r is not None]
    return DegreeEstimate(max(found, default=0), len(found) < len(results), len(results), dict(sorted(hist.items())))
