from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from prolim.padic import (DIFFERENT, SAME, UNDECIDED, PadicInt, format_padic, from_integer,
                          parse_padic, project, same_component_mod_uZ, unit)

primes = st.sampled_from([2, 3, 5, 7])


def naive_digits(m, p, n):
    """Base-p digits of m mod p^n, computed independently by repeated division."""
    r = m % p ** n
    out = []
    for _ in range(n):
        out.append(r % p)
        r //= p
    return out


def test_minus_one_is_all_ones_base_two():
    a = from_integer(-1, 2)
    assert a.digits(20) == [1] * 20
    assert format_padic(a) == "|1"
    assert a.tail == ("constant", 1)


def test_ten_base_three():
    a = from_integer(10, 3)
    assert a.digits(6) == [1, 0, 1, 0, 0, 0]
    assert format_padic(a) == "1 0 1|0"
    assert project(a, 2) == 1


def test_zero_and_unit():
    assert from_integer(0, 5).digits(8) == [0] * 8
    u = unit(7)
    assert all(project(u, n) == 1 for n in range(1, 30))


def test_u_plus_u_carries():
    u = unit(2)
    assert (u + u).digits(4) == [0, 1, 0, 0]
    assert format_padic(u + u) == "0 1|0"


def test_all_ones_base_three_projects_to_four():
    ones = parse_padic("|1", 3)
    assert project(ones, 2) == 4
    assert ones.value == Fraction(-1, 2)


def test_integer_embedding_multiplies():
    assert from_integer(7, 5) * from_integer(6, 5) == from_integer(42, 5)


def test_project_rejects_depth_zero():
    with pytest.raises(ValueError):
        project(unit(2), 0)


@pytest.mark.parametrize("text", ["1 2|", "1 x|0", "3|0", "abc"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_padic(text, 3)


@given(st.integers(-10 ** 9, 10 ** 9), primes, st.integers(1, 40))
def test_digits_match_naive_division(m, p, n):
    assert from_integer(m, p).digits(n) == naive_digits(m, p, n)


@given(st.fractions(max_denominator=50), primes)
def test_rational_roundtrip_through_text(q, p):
    if q.denominator % p == 0:
        return
    a = PadicInt.from_rational(q, p)
    assert parse_padic(format_padic(a), p) == a


@settings(max_examples=200)
@given(st.lists(st.integers(0, 6), min_size=0, max_size=6),
       st.lists(st.integers(0, 6), min_size=1, max_size=5), primes)
def test_digit_streams_reproduce(prefix, block, p):
    prefix = [d % p for d in prefix]
    block = [d % p for d in block]
    a = PadicInt.from_digits(prefix, block, p)
    n = len(prefix) + 3 * len(block)
    assert a.digits(n) == (prefix + block * 3)[:n]


@given(st.integers(-10 ** 6, 10 ** 6), st.integers(-10 ** 6, 10 ** 6), primes)
def test_from_integer_is_ring_map(m, k, p):
    a, b = from_integer(m, p), from_integer(k, p)
    assert a + b == from_integer(m + k, p)
    assert a * b == from_integer(m * k, p)
    assert -a == from_integer(-m, p)


@given(st.integers(0, 10 ** 12), primes, st.integers(1, 20), st.integers(0, 20))
def test_projection_tower_coherent(m, p, i, extra):
    a = from_integer(m, p) * PadicInt.from_rational(Fraction(1, p + 1), p)
    j = i + extra
    assert a.project(j) % p ** i == a.project(i)


def test_lazy_arithmetic_cancels_exactly():
    g = PadicInt.from_generator(lambda k: (k * k + 1) % 3, 3)
    assert (g + 5) - g == from_integer(5, 3)
    assert (g * 2 - g - g).is_closed
    with pytest.raises(ValueError):
        _ = g == g + PadicInt.from_generator(lambda k: 0, 3)
    assert g.tail == ("generator", None)
    assert format_padic(g, 4).endswith("|?")


def test_lazy_times_lazy_matches_residues():
    g = PadicInt.from_generator(lambda k: k % 2, 2)
    h = PadicInt.from_generator(lambda k: (k // 2) % 2, 2)
    for n in range(1, 20):
        assert (g * h).project(n) == g.project(n) * h.project(n) % 2 ** n


def test_component_examples():
    g = PadicInt.from_generator(lambda k: (3 * k + 1) % 5 % 3, 3)
    v = same_component_mod_uZ(g, g + 5, 16, 100)
    assert v.verdict == SAME and v.m == 5
    assert same_component_mod_uZ(g, g, 16, 100).m == 0
    ones = parse_padic("|1", 3)
    assert same_component_mod_uZ(g, g + ones, 16, 100).verdict == DIFFERENT


def test_component_lazy_difference_is_undecided_or_different():
    g = PadicInt.from_generator(lambda k: k % 2, 2)
    h = PadicInt.from_generator(lambda k: 0 if k < 3 else 1, 2)
    v = same_component_mod_uZ(g, h, 12, 5000)
    assert v.verdict in (UNDECIDED, DIFFERENT)
    if v.verdict == UNDECIDED:
        assert (h - g).project(12) == v.m % 2 ** 12


def test_classifier_exhaustive_oracle_on_half():
    # -1/2 in base 3 agrees with no integer |m| <= 100 modulo 3^16
    r = parse_padic("|1", 3).project(16)
    assert all((m - r) % 3 ** 16 for m in range(-100, 101))
