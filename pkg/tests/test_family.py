import cmath
import math
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prolim.family import (CoherenceError, NotDirectedError, ProjectiveFamily, Thread,
                           check_family_coherence, check_thread, extend_thread, limit_map,
                           make_builtin_family, make_thread, restrict_thread,
                           restrict_to_cofinal, torus_family)
from prolim.solenoid import character_level_map, real_padic_family
from prolim.spaces import Circle, CyclicGroup, Euclidean, FiniteProduct, JetCoefficients, Torus


def turns(z):
    """Angle of a unit complex number in turns, as stored on Circle(1)."""
    return Circle(1).wrap(z)


def test_power_map_squares_points():
    fam = make_builtin_family({"kind": "PowerMapTower", "p": 2})
    # e^{i pi/2} at level 2 maps to e^{i pi} at level 1
    out = fam.project(1, 2, turns(1j))
    assert Circle(1).to_complex(out) == pytest.approx(-1)


@pytest.mark.parametrize("desc", [
    {"kind": "PowerMapTower", "p": 1},
    {"kind": "PadicTower", "p": 0},
    {"kind": "JetTower", "m": 0, "n": 1},
    {"kind": "NoSuchTower"},
    {"kind": "ProductFamily", "factors": []},
])
def test_builtin_family_rejects_bad_descriptors(desc):
    with pytest.raises(ValueError):
        make_builtin_family(desc)


@pytest.mark.parametrize("desc", [
    {"kind": "PowerMapTower", "p": 2},
    {"kind": "PowerMapTower", "p": 5},
    {"kind": "DivisibilityTower"},
    {"kind": "PadicTower", "p": 5},
    {"kind": "JetTower", "m": 2, "n": 1},
    {"kind": "ProductFamily", "factors": 4},
])
def test_builtin_families_are_coherent(desc):
    rep = check_family_coherence(make_builtin_family(desc), 300, seed=1)
    assert rep.passed
    assert rep.max_deviation == 0.0
    assert rep.samples == 300


def test_padic_tower_exhaustive_residues():
    fam = make_builtin_family("PadicTower", p=5)
    for k in range(1, 5):
        for x in range(5 ** k):
            for j in range(1, k + 1):
                for i in range(1, j + 1):
                    assert fam.project(i, j, fam.project(j, k, x)) == fam.project(i, k, x)
                    assert fam.project(i, k, x) == x % 5 ** i


def test_corrupted_family_is_located():
    good = make_builtin_family("PowerMapTower", p=2)

    def project(i, j, z):
        if (i, j) == (1, 3):
            return Circle(1).wrap(3 * z)
        return good.project_fn(i, j, z)

    bad = ProjectiveFamily(good.order, good.level, project, name="corrupt")
    rep = check_family_coherence(bad, 400, seed=0)
    assert not rep.passed
    # the corrupted map enters any triple through the pair (1, 3)
    i, j, k = rep.offending
    assert i == 1 and 3 in (j, k)
    assert "surjectivity/submersion: asserted, unverified" in rep.notes


def test_thread_on_power_tower():
    fam = make_builtin_family("PowerMapTower", p=2)
    t = Fraction(3, 10)
    # exp(2 pi i t / 2^{n-1}) in turns
    th = make_thread(fam, lambda n: t / 2 ** (n - 1), audit=range(1, 12))
    assert check_thread(th, range(1, 12)).passed
    assert (1, 2) in th.verified


def test_incoherent_thread_rejected_at_pair_2_3():
    fam = make_builtin_family("PowerMapTower", p=2)
    with pytest.raises(CoherenceError) as err:
        make_thread(fam, lambda n: Fraction(1, 8) if n == 3 else 0, audit=range(1, 6))
    assert err.value.pair == (2, 3)


def test_divisibility_thread():
    fam = make_builtin_family("DivisibilityTower")
    th = make_thread(fam, lambda m: Fraction(29, 4) % m, audit=[1, 2, 3, 4, 6, 12, 24])
    assert th(6) == Fraction(5, 4)


@given(st.fractions(min_value=-50, max_value=50), st.integers(1, 30), st.integers(1, 30))
def test_divisibility_nesting(t, a, b):
    fam = make_builtin_family("DivisibilityTower")
    m = a * b
    assert fam.project(a, m, t % m) == t % a


def test_identity_limit_map():
    fam = make_builtin_family("PowerMapTower", p=2)
    phi = limit_map(fam, fam, lambda j, x: x)
    th = Thread(fam, lambda n: Fraction(1, 3) / 2 ** n)
    image = phi(th)
    assert all(image(n) == th(n) for n in range(1, 10))


def test_constant_limit_map_gives_constant_thread():
    fam = make_builtin_family("PowerMapTower", p=3)
    phi = limit_map(fam, fam, lambda j, x: 0.0)
    assert all(phi(Thread(fam, lambda n: 0.25))(n) == 0.0 for n in range(1, 6))


def test_character_family_is_a_limit_map():
    p = 3
    src, dst = real_padic_family(p), make_builtin_family("PowerMapTower", p=p)
    chi = limit_map(src, dst, character_level_map(p), budget=200)
    th = Thread(src, lambda n: (0.4, 17 % p ** n))
    image = chi(th)
    # level-n value equals (t - x mod p^n)/p^n in turns
    for n in range(1, 6):
        assert float(image(n)) == pytest.approx(((0.4 - 17 % p ** n) / p ** n) % 1, abs=1e-15)


def test_incoherent_limit_map_names_pair():
    fam = make_builtin_family("PowerMapTower", p=2)
    with pytest.raises(CoherenceError) as err:
        limit_map(fam, fam, lambda j, x: Circle(1).wrap(x + 0.1 * j))
    assert err.value.pair is not None


def test_restriction_to_even_levels_reconstructs_odd():
    fam = make_builtin_family("PadicTower", p=2)
    even = restrict_to_cofinal(fam, lambda: (2 * k for k in range(1, 10 ** 6)))
    assert even.cofinal
    x = 0b1011011101
    th = restrict_thread(Thread(fam, lambda n: x % 2 ** n), even)
    full = extend_thread(th)
    for n in range(1, 12):
        assert full(n) == x % 2 ** n


def test_restriction_to_single_index():
    fam = make_builtin_family("PowerMapTower", p=2)
    single = restrict_to_cofinal(fam, [4])
    assert single.order.members() == [4]
    assert not single.cofinal
    rep = check_family_coherence(single, 10)
    assert rep.passed and rep.worst == (4, 4, 4)
    assert single.level(4) == fam.level(4)


def test_divisibility_factorials_are_cofinal():
    fam = make_builtin_family("DivisibilityTower")
    fact = restrict_to_cofinal(fam, lambda: (factorial(n) for n in range(1, 60)))
    assert fact.cofinal
    assert all(fact.order.upper_bound(m) % m == 0 for m in range(1, 37))


def test_non_directed_subset_rejected():
    fam = torus_family(3)
    with pytest.raises(NotDirectedError):
        restrict_to_cofinal(fam, [frozenset({1}), frozenset({2})])


def test_product_family_projection_forgets_factors():
    fam = torus_family(3)
    x = (0.1, 0.2, 0.3)
    assert fam.project(frozenset({1, 3}), frozenset({1, 2, 3}), x) == (0.1, 0.3)
    jac = fam.jacobian(frozenset({2}), frozenset({1, 2, 3}), x)
    np.testing.assert_array_equal(jac, [[0, 1, 0]])


def test_jet_truncation_is_prefix():
    fam = make_builtin_family("JetTower", m=1, n=1)
    assert fam.project(1, 2, (1.0, 2.0, 3.0)) == (1.0, 2.0)
    assert fam.level(2) == JetCoefficients(2, 1, 1)


def test_family_json_roundtrip_descriptor():
    fam = make_builtin_family("PowerMapTower", p=7)
    assert fam.to_json()["p"] == 7


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_circle_wrap_in_range(x):
    c = Circle(2 * math.pi)
    w = c.wrap(x)
    assert 0 <= w < 2 * math.pi
    assert c.distance(w, x % (2 * math.pi)) < 1e-9


def test_spaces_basic():
    assert Circle(1).wrap(cmath.exp(0.5j * math.pi)) == pytest.approx(0.25)
    assert Circle(1).wrap(Fraction(5, 4)) == Fraction(1, 4)
    assert CyclicGroup(9).wrap(-1) == 8
    prod = FiniteProduct((Euclidean(2), Circle(1)))
    assert prod.split((1.0, 2.0, 0.5)) == [(1.0, 2.0), 0.5]
    assert Torus((1.0, 2.0)).difference((0.9, 0.1), (0.1, 1.9)).tolist() == pytest.approx([-0.2, 0.2])
    with pytest.raises(ValueError):
        JetCoefficients(1, 1, 1).wrap((1.0,))
