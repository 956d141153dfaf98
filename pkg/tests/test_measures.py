import math
import warnings

import numpy as np
import pytest

from builders import D_CANTOR, translation, two_ratio
from fractaltrace import measures
from fractaltrace.zeta import similarity_dimension


@pytest.mark.parametrize("alpha", [0.2, D_CANTOR, 0.9])
def test_cantor_level_one(cantor, alpha):
    m = measures.homogeneous_measure(cantor, alpha, 1)
    assert np.array_equal(m.weights, [0.5, 0.5])


def test_translation_uniform_for_every_alpha():
    spec = translation()
    for alpha in (0.1, 0.5, 0.95):
        m = measures.homogeneous_measure(spec, alpha, 4)
        assert np.allclose(m.weights, 1 / 36, rtol=1e-12)


def test_two_ratio_weight():
    spec = two_ratio()
    d = similarity_dimension([0.5, 0.25])
    assert d == pytest.approx(0.6942, abs=1e-4)
    m = measures.homogeneous_measure(spec, d, 1)
    assert m.weight((1,)) == pytest.approx((math.sqrt(5) - 1) / 2, rel=1e-12)


def test_weights_are_a_probability(alternating):
    m = measures.homogeneous_measure(alternating, 0.4, 7)
    assert m.weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.diff(m.left) > 0) and np.all(m.right > m.left)


def test_refinement_consistency(alternating):
    # a parent cell's mass is the sum of its children
    coarse = measures.homogeneous_measure(alternating, 0.6, 3)
    fine = measures.homogeneous_measure(alternating, 0.6, 4)
    kids = fine.weights.reshape(coarse.weights.size, -1).sum(axis=1)
    assert np.allclose(kids, coarse.weights, rtol=0, atol=1e-15)


def test_sigma_index_round_trip(alternating):
    m = measures.homogeneous_measure(alternating, 0.5, 3)
    for i in (0, 5, len(m) - 1):
        assert m.index(m.sigma(i)) == i
    with pytest.raises(ValueError):
        m.index((1, 1))


def test_alpha_outside_range_warns(cantor):
    with pytest.warns(UserWarning):
        measures.homogeneous_measure(cantor, 1.5, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        measures.homogeneous_measure(cantor, 0.5, 2)


@pytest.mark.parametrize("c", [0.0, 1.0, -2.5])
def test_integrate_constant(cantor, c):
    val, bound = measures.integrate(measures.homogeneous_measure(cantor, 0.3, 6), measures.const(c))
    assert val == pytest.approx(c, abs=1e-15) and bound == 0.0


@pytest.mark.parametrize("alpha", [0.3, D_CANTOR])
def test_integrate_identity_on_cantor(cantor, alpha):
    val, bound = measures.integrate(measures.homogeneous_measure(cantor, alpha, 12), measures.linear())
    assert abs(val - 0.5) <= bound + 1e-15


@pytest.mark.parametrize("level", [2, 5, 10])
def test_integrate_indicator_of_a_cell(cantor, level):
    val, bound = measures.integrate(measures.homogeneous_measure(cantor, 0.7, level), measures.indicator(0, 1 / 9))
    assert val == 0.25 and bound == 0.0


def test_integrate_straddling_indicator_bound(cantor):
    m = measures.homogeneous_measure(cantor, D_CANTOR, 8)
    val, bound = measures.integrate(m, measures.indicator(0.1, 0.5))
    assert bound > 0
    exact = measures.integrate(measures.homogeneous_measure(cantor, D_CANTOR, 16), measures.indicator(0.1, 0.5))[0]
    assert abs(val - exact) <= bound


def test_sampled_function(cantor):
    f = measures.sampled([0, 1], [0, 2])
    val, bound = measures.integrate(measures.homogeneous_measure(cantor, 0.5, 10), f)
    assert abs(val - 1.0) <= bound + 1e-15
    with pytest.raises(ValueError):
        measures.integrate(measures.homogeneous_measure(cantor, 0.5, 4), measures.sampled([0.2, 1], [0, 1]))


def test_hb_against_measure_left_third(cantor):
    r = measures.hb_vs_measure(cantor, "lacunary", D_CANTOR, measures.indicator(0, 1 / 3))
    assert r.integral == 0.5
    assert r.difference < 1e-3 and r.passed


def test_hb_against_measure_constant(cantor):
    r = measures.hb_vs_measure(cantor, "full", D_CANTOR, measures.const(1.0), level=12)
    assert r.hb == pytest.approx(1.0, abs=1e-12) and r.integral == 1.0


def test_translation_measure_side_is_independent_of_s():
    spec = translation()
    f = measures.linear()
    a = measures.hb_vs_measure(spec, "lacunary", 0.4, f, level=10, tolerance=5e-3)
    b = measures.hb_vs_measure(spec, "lacunary", 0.8, f, level=10, tolerance=5e-3)
    assert a.integral == pytest.approx(b.integral, abs=1e-15)
