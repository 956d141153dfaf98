import math

import numpy as np
import pytest

from fractaltrace import dirac
from fractaltrace import fractalspec as fs
from fractaltrace.dirac import Spectrum


def entries(s):
    return [(pytest.approx(v, rel=1e-12), m) for v, m in s.entries()]


def test_cantor_lacunary_level_three(cantor):
    s = dirac.spectrum(cantor, "lacunary", 3)
    assert list(s.entries()) == entries(Spectrum("x", [1 / 3, 1 / 9, 1 / 27], [2, 4, 8]))


def test_cantor_filled_level_two(cantor):
    s = dirac.spectrum(cantor, "filled", 2)
    assert list(s.entries()) == entries(Spectrum("x", [1, 1 / 3, 1 / 9], [2, 4, 8]))


@pytest.mark.parametrize("level", [1, 4])
def test_full_is_multiset_union(cantor, alternating, level):
    for spec in (cantor, alternating):
        lac = dirac.spectrum(spec, "lacunary", level)
        fil = dirac.spectrum(spec, "filled", level)
        full = dirac.spectrum(spec, "full", level)
        want = {}
        for s in (lac, fil):
            for v, m in s.entries():
                key = round(v, 14)
                want[key] = want.get(key, 0) + m
        got = {round(v, 14): m for v, m in full.entries()}
        assert got == want


def test_values_decreasing(alternating):
    s = dirac.spectrum(alternating, "full", 6)
    assert np.all(np.diff(s.values) < 0)


def test_closed_form_cantor_values():
    cf = dirac.symmetric_closed_form([2], [1 / 3], 6)
    assert np.allclose(cf.lacunary_values, 3.0 ** -np.arange(1, 7), rtol=1e-14)
    assert cf.lacunary_counts == tuple(2**k for k in range(6))


def test_closed_form_alternating_first_level():
    cf = dirac.symmetric_closed_form([3, 2], [1 / 6, 1 / 4], 1)
    assert cf.lacunary_values[0] == pytest.approx(0.25)
    s = dirac.symmetric_spectrum([3, 2], [1 / 6, 1 / 4], "lacunary", 1)
    assert list(s.entries()) == [(pytest.approx(0.25), 4)]


def test_closed_form_matches_enumeration_to_level_ten(cantor):
    for kind in dirac.KINDS:
        a = dirac.symmetric_spectrum([2], [1 / 3], kind, 10)
        b = dirac.spectrum(cantor, kind, 10)
        assert np.array_equal(a.multiplicities, b.multiplicities)
        assert np.allclose(a.values, b.values, rtol=1e-13, atol=0)


def test_closed_form_matches_enumeration_alternating(alternating):
    a = dirac.symmetric_spectrum([2, 3], [0.25, 1 / 6], "full", 7)
    b = dirac.spectrum(alternating, "full", 7)
    assert np.array_equal(a.multiplicities, b.multiplicities)
    assert np.allclose(a.values, b.values, rtol=1e-13)


def test_total_multiplicities():
    K = 8
    cf = dirac.symmetric_closed_form([2, 3], [0.25, 1 / 6], K)
    lac = dirac.symmetric_spectrum([2, 3], [0.25, 1 / 6], "lacunary", K)
    fil = dirac.symmetric_spectrum([2, 3], [0.25, 1 / 6], "filled", K)
    assert lac.total_multiplicity == 2 * sum(cf.lacunary_counts[:K])
    assert fil.total_multiplicity == 2 * sum(cf.filled_counts[: K + 1])


def test_closed_form_reaches_deep_levels():
    s = dirac.symmetric_spectrum([2], [1 / 3], "full", 40)
    assert s.total_multiplicity > 10**12


def test_closed_form_rejects_overlap():
    with pytest.raises(ValueError):
        dirac.symmetric_closed_form([2], [0.5], 3)


def test_tensor_single_pair():
    one = Spectrum("x", [1.0], [1])
    t = dirac.tensor_spectrum(one, one, 0.1)
    assert list(t.entries()) == [(pytest.approx(2**-0.5), 1)]


def test_tensor_harmonic_pairs():
    n = np.arange(1, 30, dtype=float)
    h = Spectrum("x", 1 / n, np.ones(n.size, dtype=int))
    t = dirac.tensor_spectrum(h, h, 0.05)
    i, j = np.meshgrid(n, n)
    v = (i**2 + j**2) ** -0.5
    v = v[v >= 0.05]
    assert t.total_multiplicity == v.size
    assert np.allclose(np.sort(np.unique(np.round(v, 12)))[::-1], t.values, rtol=1e-10)


def test_tensor_budget():
    n = np.arange(1, 2000, dtype=float)
    h = Spectrum("x", 1 / n, np.ones(n.size, dtype=int))
    with pytest.raises(fs.BudgetExceededError):
        dirac.tensor_spectrum(h, h, 1e-3, budget=1000)


@pytest.mark.parametrize("kind", dirac.KINDS)
def test_commutator_identity_and_constant(alternating, kind):
    assert dirac.commutator_norm(alternating, kind, 4, lambda x: x) == pytest.approx(1.0, rel=1e-12)
    assert dirac.commutator_norm(alternating, kind, 4, lambda x: np.full_like(x, 5.0)) == 0.0


def test_commutator_indicator(cantor):
    f = lambda x: (x >= 2 / 3 - 1e-12).astype(float)  # noqa: E731
    assert dirac.commutator_norm(cantor, "lacunary", 5, f) == pytest.approx(3.0)


def test_commutator_below_lipschitz(cantor):
    f = lambda x: np.sin(7 * x)  # noqa: E731
    assert dirac.commutator_norm(cantor, "full", 6, f) <= 7.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_commutator_undefined_function(cantor):
    with pytest.raises(ValueError):
        dirac.commutator_norm(cantor, "full", 2, lambda x: np.log(x))


def test_to_step_function(cantor):
    mu = dirac.to_step_function(dirac.spectrum(cantor, "lacunary", 2))
    assert mu.truncated
    assert np.allclose(mu.values, [1 / 3, 1 / 9])
    assert np.array_equal(mu.widths, [2.0, 4.0])


def test_to_step_function_empty():
    with pytest.raises(ValueError):
        dirac.to_step_function(Spectrum("x", [], []))


def test_sandwich_for_symmetric_spec(alternating):
    # lacunary and filled eigenvalue functions dominate each other up to rescaling
    from fractaltrace import seqcore

    lac = dirac.to_step_function(dirac.spectrum(alternating, "lacunary", 8))
    fil = dirac.to_step_function(dirac.spectrum(alternating, "filled", 8))
    x = np.geomspace(1, 0.2 * min(lac.known_width, fil.known_width), 200)
    A, B = 4.0, 6.0
    assert np.all(seqcore.mu_at(lac, x) <= A * seqcore.mu_at(fil, x / B))
    assert np.all(seqcore.mu_at(fil, x) <= A * seqcore.mu_at(lac, x / B))


def test_cache_round_trip(tmp_path, alternating):
    s = dirac.spectrum(alternating, "full", 5)
    p = tmp_path / "s.csv"
    side = dirac.write_spectrum(s, p)
    assert side.exists()
    r = dirac.read_spectrum(p)
    assert np.array_equal(r.values, s.values)
    assert np.array_equal(r.multiplicities, s.multiplicities)
    assert r.kind == "full" and r.level_cutoff == 5 and r.complete_above == s.complete_above


def test_invalid_kind(cantor):
    with pytest.raises(ValueError):
        dirac.spectrum(cantor, "half", 2)
    with pytest.raises(ValueError):
        dirac.spectrum(cantor, "lacunary", 0)
