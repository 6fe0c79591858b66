import math

import numpy as np
import pytest

import oracles
from anosov_plane.domains import Domain, DomainError, sample_points
from anosov_plane.metrics import (MetricField, Profile, ThetaProfile, frame_at, inner_product, lower_sum_bound,
                                  norm, path_length, phi_band, phi_hyp)
from anosov_plane.plane_core import Curve, PlaneMap, Point, TangentVector, differential

U, V = Domain.band_u(), Domain.hyperbola_v()
GU = MetricField.conformal(Profile.BAND, U)
GV = MetricField.conformal(Profile.HYP, V)
GF = MetricField.frame(0.5)
TH = ThetaProfile()


def test_phi_examples():
    assert phi_band(1.5) == 4.0
    assert phi_band(1.1) == pytest.approx(1 / (0.1 * 0.9), rel=1e-15)
    assert phi_hyp(0.0) == 2.0
    assert phi_hyp(0.5) == pytest.approx(8 / 3, rel=1e-15)
    assert phi_hyp(-0.5) == phi_hyp(0.5)
    for bad in (1.0, 2.0, 2.5):
        with pytest.raises(DomainError):
            phi_band(bad)
    for bad in (1.0, -1.0):
        with pytest.raises(DomainError):
            phi_hyp(bad)


def test_inner_product_examples():
    p = Point(1, 1.5)
    assert inner_product(GU, p, TangentVector(p, 1, 0), TangentVector(p, 1, 0)) == 16
    o = Point(0, 0)
    assert inner_product(GF, o, TangentVector(o, 1, 0), TangentVector(o, 1, 0)) == pytest.approx(1, abs=1e-15)
    q = Point(1, 0)
    assert inner_product(GF, q, TangentVector(q, 0, 1), TangentVector(q, 0, 1)) == pytest.approx(4, rel=1e-12)
    with pytest.raises(DomainError):
        inner_product(GU, Point(1, 1), TangentVector(Point(1, 1), 1, 0), TangentVector(Point(1, 1), 1, 0))


def test_norm_examples():
    assert norm(GU, TangentVector(Point(1, 1.5), 0, 1)) == 4
    assert norm(MetricField.euclidean(), TangentVector(Point(7, -2), 3, 4)) == 5
    assert norm(GF, TangentVector(Point(0, 17), 1, 0)) == pytest.approx(1, abs=1e-15)


def test_frame_lambda_range():
    for lam in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            MetricField.frame(lam)


def test_path_length_examples():
    r = path_length(MetricField.euclidean(), Curve.segment((0, 0), (3, 4)), tol=1e-8)
    assert r.value == pytest.approx(5, rel=1e-12)
    r = path_length(GU, Curve.segment((1, 1.5), (1, 1.75), 64), tol=1e-12)
    assert r.value == pytest.approx(oracles.LOG3, rel=1e-10)
    assert r.last_delta < 1e-12 and not r.truncated
    r = path_length(GV, Curve.segment((0, 0), (1, 0)), tol=1e-12)
    assert r.value == pytest.approx(2, rel=1e-14)


def test_path_length_domain_error():
    with pytest.raises(DomainError):
        path_length(GU, Curve.segment((1, 1.5), (1, 2.0)))
    with pytest.raises(DomainError):
        path_length(GU, Curve.segment((0.6, 3.0), (1.8, 1.0)))  # chord bulges past tau = 2


def test_path_length_truncation_flag():
    r = path_length(GU, Curve.segment((1, 1.01), (1, 1.99)), tol=1e-15, max_levels=3)
    assert r.truncated and r.refinement_levels == 3 and r.value > 0


def test_quadrature_consistency():
    tol = 1e-9
    c = Curve.segment((1, 1.2), (1.3, 1.5), 5)
    a = path_length(GU, c, tol=tol)
    b = path_length(GU, c.refined(1), tol=tol)
    assert a.last_delta < tol
    assert abs(a.value - b.value) / a.value < 10 * tol


def test_lower_sum_examples():
    assert lower_sum_bound(Profile.BAND, 1.5, 1.6, 1, 1.0) == pytest.approx(0.4, rel=1e-15)
    prev = 0.0
    for n in (1, 10, 100, 10_000, 1_000_000):
        v = lower_sum_bound(Profile.BAND, 1.5, 1.75, n, 1.0)
        assert prev <= v < math.log(3)
        prev = v
    assert math.log(3) - prev < 1e-5
    for a, b in ((1.5, 1.75), (1.2, 1.9), (1.05, 1.4)):
        assert lower_sum_bound(Profile.BAND, a, b, 37, 2.0) == pytest.approx(
            2 * lower_sum_bound(Profile.BAND, a, b, 37, 1.0), rel=1e-15)
    with pytest.raises(DomainError):
        lower_sum_bound(Profile.BAND, 1.5, 2.0, 10, 1.0)


@pytest.mark.parametrize("n", [1, 3, 50, 1000])
def test_lower_sum_below_length(n):
    exact = path_length(GU, Curve.segment((1, 1.5), (1, 1.95), 64), tol=1e-11).value
    assert lower_sum_bound(Profile.BAND, 1.5, 1.95, n, 1.0) <= exact
    exact = path_length(GV, Curve.segment((1, -0.9), (1, 0.99), 64), tol=1e-11).value
    assert lower_sum_bound(Profile.HYP, -0.9, 0.99, n, 1.0) <= exact


def test_frame_at_examples():
    f = frame_at(TH, 0.05)
    assert np.allclose(f.e_s, (1, 0), atol=1e-15) and np.allclose(f.e_u, (0, 1), atol=1e-15)
    f = frame_at(TH, 0.3)
    assert np.allclose(f.e_s, (0, 1), atol=1e-15) and np.allclose(f.e_u, (-1, 0), atol=1e-15)
    f = frame_at(TH, 1.05)
    assert np.allclose(f.e_s, (1, 0), atol=1e-12)


def test_theta_profile_properties():
    x = np.linspace(-3, 3, 60001)
    th = TH(x)
    assert np.all(np.diff(th) >= 0)
    for a, b in TH.rising_intervals():
        u = np.linspace(a, b, 1001)[1:-1]
        assert np.all(np.diff(TH(u)) > 0)
    for a, b, v in TH.plateaus():
        assert np.all(TH(np.linspace(a, b, 101)) == v)
    assert TH(0.5) == pytest.approx(math.pi, abs=1e-15)
    assert np.allclose(TH(x + 1) - th, 2 * math.pi, atol=1e-12)
    ref = np.array([oracles.theta_ref(float(v)) for v in x[::97]])
    assert np.allclose(th[::97], ref, atol=1e-12)
    assert all(TH.scalar(float(v)) == TH(float(v)) for v in x[::53])


def test_frame_orthonormal(rng):
    for x in rng.uniform(-10, 10, 1000):
        f = frame_at(TH, float(x))
        assert abs(np.dot(f.e_s, f.e_u)) < 1e-12
        assert abs(np.linalg.norm(f.e_s) - 1) < 1e-12 and abs(np.linalg.norm(f.e_u) - 1) < 1e-12


@pytest.mark.parametrize("d,g,prof", [(U, GU, Profile.BAND), (V, GV, Profile.HYP)], ids=["U", "V"])
def test_conformal_scale_T_invariant(d, g, prof, rng):
    T = PlaneMap.linear()
    pts = sample_points(d, 10_000, rng)
    x, y = pts[:, 0], pts[:, 1]
    assert np.array_equal(g.scale_xy(x, y), g.scale_xy(*T.forward_xy(x, y)))


def test_exact_expansion_band(rng):
    T = PlaneMap.linear()
    for x, y in sample_points(U, 500, rng):
        p = Point(float(x), float(y))
        for v, ratio in ((TangentVector(p, 1, 0), 2.0), (TangentVector(p, 0, 1), 0.5)):
            assert norm(GU, differential(T, v)) / norm(GU, v) == pytest.approx(ratio, rel=1e-12)


def test_frame_translation_ratios(rng):
    for x, y in rng.uniform(-3, 3, size=(500, 2)):
        f0, f1 = frame_at(TH, x), frame_at(TH, x + 1)
        for e, ratio in ((f0.e_u, 2.0), (f0.e_s, 0.5)):
            n0 = GF.norm_xy(x, y, *e)
            n1 = GF.norm_xy(x + 1, y, *e)
            assert n1 / n0 == pytest.approx(ratio, rel=1e-9)
        assert np.allclose(f0.e_s, f1.e_s, atol=1e-12)
