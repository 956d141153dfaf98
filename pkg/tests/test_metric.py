import math

import numpy as np
import pytest

from builders import fat_cantor
from fractaltrace import dirac, metric
from fractaltrace import fractalspec as fs


def test_cantor_full_level_one(cantor):
    g = metric.build_graph(cantor, "full", 1)
    assert np.allclose(g.vertices, [0, 1 / 3, 2 / 3, 1])
    edges = sorted((tuple(e), round(w, 12)) for e, w in zip(g.edges.tolist(), g.weights))
    assert edges == [((0, 1), round(1 / 3, 12)), ((0, 3), 1.0), ((1, 2), round(1 / 3, 12)), ((2, 3), round(1 / 3, 12))]


def test_cantor_lacunary_level_two_isolated_edges(cantor):
    g = metric.build_graph(cantor, "lacunary", 2)
    assert g.edges.shape == (3, 2)
    assert np.unique(g.edges).size == 6


def test_filled_level_zero(cantor):
    g = metric.build_graph(cantor, "filled", 0)
    assert g.edges.shape == (1, 2) and g.weights[0] == 1.0
    with pytest.raises(ValueError):
        metric.build_graph(cantor, "lacunary", 0)


def test_distance_direct_edge(cantor):
    g = metric.build_graph(cantor, "full", 3)
    assert metric.connes_distance(g, 0.0, 1.0) == 1.0
    assert metric.connes_distance(g, 0.5 * 0 + 1 / 3, 1 / 3) == 0.0


@pytest.mark.parametrize("level", [2, 4, 6])
def test_full_triple_is_euclidean_on_endpoints(cantor, level):
    g = metric.build_graph(cantor, "full", level)
    v = g.vertices
    D = metric.distance_matrix(g, v)
    assert np.max(np.abs(D - np.abs(v[:, None] - v[None, :]))) < 1e-12


def test_lacunary_distances(cantor):
    g = metric.build_graph(cantor, "lacunary", 4)
    assert metric.connes_distance(g, 1 / 3, 2 / 3) == pytest.approx(1 / 3)
    assert metric.connes_distance(g, 0.0, 1.0) == math.inf
    with pytest.raises(KeyError):
        metric.connes_distance(g, 0.0, 1.0, strict=True)
    with pytest.raises(KeyError):
        metric.connes_distance(g, 0.0, 1.5)


def test_lower_bound_and_axioms(alternating):
    for kind in ("lacunary", "filled", "full"):
        g = metric.build_graph(alternating, kind, 3)
        v = g.vertices
        D = metric.distance_matrix(g, v)
        E = np.abs(v[:, None] - v[None, :])
        assert np.all(D >= E - 1e-15)
        assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
        fin = np.isfinite(D)
        # triangle inequality through every intermediate vertex
        via = np.min(D[:, :, None] + D[None, :, :], axis=1)
        assert np.all(D[fin] <= via[fin] + 1e-12)


def test_distance_matrix_unknown_vertex(cantor):
    g = metric.build_graph(cantor, "full", 2)
    with pytest.raises(KeyError):
        metric.distance_matrix(g, [0.0, 0.5])


def test_gap_sum_cantor(cantor):
    for k in (1, 5, 10):
        r = metric.lacunary_gap_sum_bound(cantor, 0.0, 1.0, k)
        assert r.bound == pytest.approx(1 - (2 / 3) ** k, rel=1e-12)
    assert metric.lacunary_gap_sum_bound(cantor, 0.0, 1.0, 40).deficit < 1e-6


def test_gap_sum_subinterval_uses_geometry(cantor):
    r = metric.lacunary_gap_sum_bound(cantor, 0.0, 1 / 3, 8)
    assert r.bound == pytest.approx((1 - (2 / 3) ** 7) / 3, rel=1e-12)


def test_gap_sum_fat_cantor():
    spec = fat_cantor()
    r = metric.lacunary_gap_sum_bound(spec, 0.0, 1.0, 30)
    assert r.bound == pytest.approx(0.4399, abs=1e-3)
    assert r.deficit == pytest.approx(0.5601, abs=1e-3)
    assert r.measure_estimate == pytest.approx(r.deficit, abs=1e-6)


def test_gap_sum_degenerate(cantor):
    r = metric.lacunary_gap_sum_bound(cantor, 0.3, 0.3, 5)
    assert (r.bound, r.deficit) == (0.0, 0.0)


def test_dichotomy(cantor, alternating):
    for spec in (cantor, alternating, fat_cantor()):
        zero = fs.lebesgue_zero(spec).verdict == "zero"
        deficits = [metric.lacunary_gap_sum_bound(spec, 0.0, 1.0, k).deficit for k in (10, 20, 30)]
        assert (deficits[-1] < 1e-4) == zero
        assert deficits[0] >= deficits[1] >= deficits[2]


def test_commutator_of_identity_is_one(cantor):
    assert dirac.commutator_norm(cantor, "full", 5, lambda x: x) == pytest.approx(1.0)
