import math

import numpy as np
import pytest

from anosov_plane.analysis import (FLOWS, ReebGraph, UnknownFlowError, derive_reeb_graph, encoded_graph,
                                   get_flow, prolongational_limit, quasi_parallel_obstruction)
from anosov_plane.plane_core import Point

H = math.pi / 2


def test_reeb1_jplus_left_edge():
    J = prolongational_limit("reeb1", Point(-H, 0.0))
    assert not J.empty
    assert np.all(np.abs(J.samples[:, 0] - H) <= J.grid_tol)
    assert J.near_line(H).sum() >= 10
    times = [t for _, _, t, _ in J.witnesses]
    assert len(times) == len(J.deltas) and all(b > a for a, b in zip(times, times[1:]))
    for d, start, _, _ in J.witnesses:
        assert math.hypot(start.x + H, start.y) <= d * math.sqrt(2) + 1e-12


def test_reeb1_jminus_right_edge():
    J = prolongational_limit("reeb1", Point(H, 0.0), "backward")
    assert not J.empty
    assert np.all(np.abs(J.samples[:, 0] + H) <= J.grid_tol)
    assert all(t < 0 for _, _, t, _ in J.witnesses)


@pytest.mark.parametrize("x", [-2.5, 0.0, 2.2])
def test_parallel_and_interior_points_empty(x):
    for direction in ("forward", "backward"):
        J = prolongational_limit("reeb1", Point(x, 0.3), direction, t_max=300.0)
        assert J.empty


def test_reeb2_jminus_separating_leaf():
    J = prolongational_limit("reeb2-same-orientation", Point(0.0, 0.0), "backward")
    assert J.near_line(-1.0).sum() >= 3 and J.near_line(1.0).sum() >= 3
    assert np.all(J.near_line(-1.0) | J.near_line(1.0))


def test_prolongational_errors():
    with pytest.raises(UnknownFlowError):
        prolongational_limit("nope", Point(0, 0))
    with pytest.raises(UnknownFlowError):
        get_flow("reeb3")
    with pytest.raises(ValueError):
        prolongational_limit("reeb1", Point(0, 0), "sideways")
    with pytest.raises(ValueError):
        prolongational_limit("reeb1", Point(0, 0), t_max=-1.0)


def test_obstruction_examples():
    assert quasi_parallel_obstruction(encoded_graph("reeb1")) is False
    assert quasi_parallel_obstruction(encoded_graph("reeb2-same-orientation")) is True
    assert quasi_parallel_obstruction(encoded_graph("reeb2-opposite")) is False
    assert quasi_parallel_obstruction(encoded_graph("frame-unstable")) is True


def test_graph_validation():
    g = encoded_graph("reeb1")
    with pytest.raises(ValueError):
        ReebGraph(g.regions, {**g.separatrices, "left-edge": 0}, g.adjacency, g.limit_relations).validate()
    with pytest.raises(ValueError):
        ReebGraph(g.regions, g.separatrices, g.adjacency,
                  g.limit_relations + (("left-edge", "right-edge", "forward", "b"),)).validate()
    with pytest.raises(ValueError):
        ReebGraph({**g.regions, "a": "swirl"}, g.separatrices, g.adjacency, g.limit_relations).validate()
    bad_adj = dict(g.adjacency, **{"right-edge": ("b", "c")})
    with pytest.raises(ValueError):
        ReebGraph(g.regions, g.separatrices, bad_adj, ()).validate()
    assert g.to_dict()["separatrices"] == {"left-edge": -1, "right-edge": 1}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(FLOWS))
def test_derived_graph_matches_encoding(name):
    d, e = derive_reeb_graph(name), encoded_graph(name)
    assert set(d.limit_relations) == set(e.limit_relations)
    assert quasi_parallel_obstruction(d) == quasi_parallel_obstruction(e)
