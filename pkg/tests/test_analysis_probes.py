import math

import numpy as np
import pytest

import oracles
from anosov_plane.analysis import completeness_probe, frame_completeness_probe, hyperbolicity_probe
from anosov_plane.analysis.completeness import bilipschitz_constant, fiber_curve, tau_lipschitz_constant
from anosov_plane.domains import Domain, DomainError, default_whisker
from anosov_plane.foliations import (band_u_structure, frame_structure, hyperbola_v_structure,
                                     standard_structure, whisker_structure)
from anosov_plane.metrics import MetricField, Profile
from anosov_plane.plane_core import IterationLimitError

GU = MetricField.conformal(Profile.BAND, Domain.band_u())
GV = MetricField.conformal(Profile.HYP, Domain.hyperbola_v())


def test_band_fiber_matches_closed_form():
    r = completeness_probe(GU, 1.0, oracles.EPS_EXTENDED, side="upper", tau_start=1.5)
    assert r.verdict == "diverges"
    assert r.epsilons == oracles.EPS_EXTENDED
    assert np.allclose(r.lengths, oracles.BAND_UPPER_FROZEN, rtol=1e-9)
    assert all(L >= b for L, b in zip(r.lengths, r.certified_lower_bounds))
    assert all(b > a for a, b in zip(r.lengths, r.lengths[1:]))
    lo = completeness_probe(GU, 1.0, oracles.EPS_EXTENDED, side="lower")
    assert lo.verdict == "diverges"
    assert np.allclose(lo.lengths, oracles.BAND_LOWER_FROZEN, rtol=1e-9)


def test_band_spec_values():
    r = completeness_probe(GU, 1.0, oracles.EPS_ACCEPT)
    for L, ref in zip(r.lengths, (4.595, 6.907, 9.210, 11.513)):
        assert L == pytest.approx(ref, abs=1e-3)


def test_hyp_fiber():
    r = completeness_probe(GV, 1.0, oracles.EPS_EXTENDED, tau_start=0.0)
    assert r.verdict == "diverges"
    assert np.allclose(r.lengths, oracles.HYP_UPPER_FROZEN, rtol=1e-9)
    assert all(L >= b for L, b in zip(r.lengths, r.certified_lower_bounds))
    lo = completeness_probe(GV, -2.0, oracles.EPS_ACCEPT, side="lower")
    assert lo.verdict == "diverges"


def test_hyp_slope_scales_with_fiber():
    """On x = x0 the length is (1/x0) * integral of phi, so the log-slope is 1/x0."""
    for x0 in (0.5, 1.0, 2.0):
        r = completeness_probe(GV, x0, [1e-3, 1e-4, 1e-5, 1e-6])
        slope = np.polyfit(-np.log(r.epsilons), r.lengths, 1)[0]
        assert slope == pytest.approx(1 / x0, rel=1e-3)
        for e, L in zip(r.epsilons, r.lengths):
            assert L == pytest.approx(oracles.hyp_fiber_length(e, x0), rel=1e-8)


def test_single_epsilon_inconclusive():
    r = completeness_probe(GU, 1.0, [1e-3])
    assert r.verdict == "inconclusive"


def test_threshold_policy():
    assert completeness_probe(GU, 1.0, [1e-2, 1e-3], threshold=100.0).verdict == "inconclusive"
    assert completeness_probe(GU, 1.0, [1e-2, 1e-3], threshold=5.0).verdict == "diverges"


def test_probe_errors():
    with pytest.raises(DomainError):
        completeness_probe(GU, -1.0, [1e-2, 1e-3])
    with pytest.raises(ValueError):
        completeness_probe(GU, 1.0, [0.0])
    with pytest.raises(ValueError):
        completeness_probe(MetricField.frame(), 1.0, [1e-2])


def test_lipschitz_constant():
    c = fiber_curve(0.5, 1.5, 1.99)
    assert tau_lipschitz_constant(c) == pytest.approx(2.0, rel=1e-12)
    assert 0 < bilipschitz_constant(Profile.BAND) < 1


def test_frame_completeness():
    out = frame_completeness_probe(MetricField.frame(0.5), oracles.FRAME_REACHES)
    for side, ref in (("right", oracles.FRAME_RIGHT_FROZEN), ("left", oracles.FRAME_LEFT_FROZEN)):
        r = out[side]
        assert r.verdict == "diverges"
        assert np.allclose(r.lengths, ref, rtol=1e-9)
        assert all(L >= b for L, b in zip(r.lengths, r.certified_lower_bounds))


@pytest.mark.parametrize("build", [band_u_structure, hyperbola_v_structure, standard_structure,
                                   lambda: whisker_structure(default_whisker(3))])
def test_hyperbolicity_line_structures(build):
    rep = hyperbolicity_probe(build(), n_max=20, n_samples=1000)
    assert rep.verdict == "pass"
    assert rep.fitted_lambda == pytest.approx(2.0, rel=1e-12)
    assert rep.fitted_C == pytest.approx(1.0, rel=1e-12)
    assert rep.max_rel_error < 1e-12
    for n in rep.n_range:
        assert rep.unstable_ratios[n][0] == pytest.approx(2.0 ** n, rel=1e-12)
        assert rep.stable_ratios[n][1] == pytest.approx(2.0 ** -n, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 0.7])
def test_hyperbolicity_frame(lam):
    rep = hyperbolicity_probe(frame_structure(lam), n_max=10, n_samples=1000)
    assert rep.verdict == "pass"
    lo, hi = rep.step_ratios["unstable"]
    assert abs(lo - 1 / lam) < 1e-9 * (1 / lam) and abs(hi - 1 / lam) < 1e-9 * (1 / lam)
    lo, hi = rep.step_ratios["stable"]
    assert abs(lo - lam) < 1e-9 * lam and abs(hi - lam) < 1e-9 * lam
    assert rep.fitted_lambda == pytest.approx(1 / lam, rel=1e-9)


def test_hyperbolicity_cap():
    with pytest.raises(IterationLimitError):
        hyperbolicity_probe(band_u_structure(), n_max=65)


def test_hyperbolicity_deterministic():
    a = hyperbolicity_probe(frame_structure(), n_max=5, n_samples=50, rng=np.random.default_rng(3))
    b = hyperbolicity_probe(frame_structure(), n_max=5, n_samples=50, rng=np.random.default_rng(3))
    assert a.to_dict() == b.to_dict()
