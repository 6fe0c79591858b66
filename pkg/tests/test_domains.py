import json

import numpy as np
import pytest

from anosov_plane.domains import (Domain, DomainError, DomainKind, WhiskerSpec, WhiskerSpecError,
                                  boundary_curves, contains, default_whisker, fundamental_cell,
                                  invariance_check, reduce_to_cell, sample_points)
from anosov_plane.plane_core import PlaneMap, Point, apply_inverse, apply_map, iterate

T = PlaneMap.linear()
U, V = Domain.band_u(), Domain.hyperbola_v()


def test_contains_examples():
    assert contains(U, Point(1, 1.5))
    assert not contains(U, Point(1, 1))
    assert not contains(U, Point(1, 2))
    assert not contains(U, Point(-1, -1.5))
    assert contains(V, Point(0, 0))
    assert not contains(V, Point(3, 0.4))
    assert contains(Domain.full_plane(), Point(1e9, -1e9))


def test_fundamental_cells():
    d1 = fundamental_cell(U)
    assert d1.kind is DomainKind.FUNDAMENTAL_DA and d1.a == 1
    assert contains(d1, Point(1, 1)) and contains(d1, Point(2, 1)) and contains(d1, Point(1.5, 1.2))
    assert not contains(d1, Point(2.1, 0.6))
    dt = fundamental_cell(V)
    assert dt.kind is DomainKind.FUNDAMENTAL_TILDE_DA
    assert contains(dt, Point(1, -1)) and contains(dt, Point(2, 0.5)) and not contains(dt, Point(1.5, 0.9))
    spec = default_whisker(3)
    cell = fundamental_cell(Domain.whiskered(spec))
    assert contains(cell, Point(1.5, 1.0))
    # the marked points sit on the whisker, outside D_1
    for p in spec.marked_points():
        assert contains(cell, p) and not contains(d1, p)
    with pytest.raises(ValueError):
        fundamental_cell(Domain.full_plane())


def test_reduce_to_cell_examples():
    assert reduce_to_cell(U, Point(4, 0.3)) == (Point(1, 1.2), 2)
    assert reduce_to_cell(U, Point(1.5, 1)) == (Point(1.5, 1), 0)
    assert reduce_to_cell(U, Point(0.5, 3)) == (Point(1, 1.5), -1)
    with pytest.raises(DomainError):
        reduce_to_cell(U, Point(1, 3))


def test_tiling(rng):
    d1 = fundamental_cell(U)
    pts = sample_points(U, 10_000, rng, max_power=20)
    for x, y in pts:
        p = Point(float(x), float(y))
        q, n = reduce_to_cell(U, p)
        assert contains(d1, q)
        r = iterate(T, q, n)
        assert abs(r.x - p.x) <= 1e-12 * abs(p.x) and abs(r.y - p.y) <= 1e-12 * abs(p.y)


def test_invariance_examples():
    assert invariance_check(U, T, 1000)
    assert invariance_check(V, T, 1000)
    assert not invariance_check(V, PlaneMap.translation(1.0), 1000)
    with pytest.raises(ValueError):
        invariance_check(U, T, 0)


@pytest.mark.parametrize("d", [U, V, Domain.whiskered(default_whisker(3))], ids=["U", "V", "whisker"])
def test_membership_commutes_with_T(d, rng):
    pts = np.vstack([sample_points(d, 2000, rng), rng.uniform(-4, 4, size=(2000, 2))])
    inside = d.contains_xy(pts[:, 0], pts[:, 1])
    img = d.contains_xy(*T.forward_xy(pts[:, 0], pts[:, 1]))
    pre = d.contains_xy(*T.inverse_xy(pts[:, 0], pts[:, 1]))
    assert np.array_equal(inside, img) and np.array_equal(inside, pre)
    assert inside[:2000].all()


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_default_whisker(n):
    spec = default_whisker(n)
    assert spec.n_extrema == n
    assert spec.maxima == sorted(spec.maxima) and len(set(spec.maxima)) == len(spec.maxima)
    assert spec.minima == sorted(spec.minima, reverse=True)
    for y in spec.extrema_y:
        assert abs(y - spec.c) > spec.eps
    assert 1 < spec.a < spec.b < 2
    assert WhiskerSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_default_whisker_rejects_zero():
    with pytest.raises(WhiskerSpecError):
        default_whisker(0)


def test_whisker_invariants_checked():
    d = default_whisker(3).to_dict()
    bad = dict(d, c=d["extrema_y"][0] - 0.5 * d["eps"])
    with pytest.raises(WhiskerSpecError):
        WhiskerSpec.from_dict(bad)
    ys = list(d["extrema_y"])
    ys[0], ys[2] = ys[2], ys[0]  # maxima no longer increasing
    with pytest.raises(WhiskerSpecError):
        WhiskerSpec.from_dict(dict(d, extrema_y=ys))
    with pytest.raises(WhiskerSpecError):
        WhiskerSpec.from_dict(dict(d, b=2.5, crossings_x=d["crossings_x"][:-1] + [2.5]))
    with pytest.raises(WhiskerSpecError):
        WhiskerSpec.from_dict({k: v for k, v in d.items() if k != "eps"})


@pytest.mark.parametrize("d", [U, V], ids=["U", "V"])
def test_boundary_curves_on_hyperbolas(d):
    curves = boundary_curves(d, (-4, 4, -4, 4))
    assert curves
    for bc in curves:
        t = float(bc.side.split("=")[1])
        xy = bc.parametrization.samples
        assert np.max(np.abs(xy[:, 0] * xy[:, 1] - t)) < 1e-10
        assert (np.abs(xy) <= 4 + 1e-12).all()
