"""Acceptance gate: twelve numbered criteria at fixed tolerances.

Each test records its measured quantity; the conftest hook prints one
PASS/FAIL line per criterion at the end of the run.  Run it alone with
``python3 -m pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""
import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from prolim.curves import (boman_harness, dyadic_divided_differences, geodesic_differential,
                           special_curve)
from prolim.cylinder import (add_fields, audit_derivation, check_field_coherence,
                             cyl_from_expression, derivation_from_fields, differential,
                             fields_from_derivation, lie_bracket, lift_field, lift_tangent,
                             product_field, random_level_function)
from prolim.family import Thread, make_builtin_family, torus_family
from prolim.gauge import (Character, ConnectionU1, Edge, Graph, holonomy, identity_refinement,
                          lambda_certificate, project_connection, refine_graph)
from prolim.padic import DIFFERENT, SAME, PadicInt, from_integer, parse_padic, \
    same_component_mod_uZ, unit
from prolim.solenoid import (canonicalize, character, chi_n, chi_phase, f_tilde, f_tilde_raw,
                             noncylindrical_witness, zero)
from prolim.spaces import Euclidean

PRIMES = (2, 3, 5)
TWO_PI = 2 * math.pi


def turn(q) -> complex:
    return cmath.exp(2j * math.pi * float(q))


def random_padic(rng, p, depth=32):
    kind = rng.integers(3)
    if kind == 0:
        return from_integer(int(rng.integers(-10 ** 12, 10 ** 12)), p)
    if kind == 1:
        den = int(rng.integers(1, 200))
        while den % p == 0:
            den += 1
        return PadicInt.from_rational(Fraction(int(rng.integers(-10 ** 6, 10 ** 6)), den), p)
    prefix = [int(d) for d in rng.integers(0, p, int(rng.integers(0, depth)))]
    block = [int(d) for d in rng.integers(0, p, int(rng.integers(1, 6)))]
    return PadicInt.from_digits(prefix, block, p)


def random_point(rng, p):
    t = Fraction(int(rng.integers(0, 10 ** 9)), 10 ** 9)
    return canonicalize(t, random_padic(rng, p))


def torus_thread(fam, angles):
    return Thread(fam, lambda j: tuple(angles[k - 1] for k in sorted(j)))


@pytest.mark.criterion(1, "character coherence")
def test_character_coherence(record_property):
    rng = np.random.default_rng(1)
    worst, naive = 0.0, 0.0
    for p in PRIMES:
        for _ in range(100):
            pt = random_point(rng, p)
            phases = {n: chi_phase(pt, n) for n in range(1, 11)}
            values = {n: chi_n(pt, n) for n in range(1, 11)}
            for m in range(2, 11):
                for n in range(1, m):
                    # (chi_m)^(p^(m-n)) through the exact phase of chi_m
                    power = turn(phases[m] * p ** (m - n) % 1)
                    worst = max(worst, abs(power - values[n]))
                    # repeated float multiplication amplifies rounding by p^(m-n)
                    naive = max(naive, abs(values[m] ** (p ** (m - n)) - values[n]))
    record_property("measured", f"max deviation {worst:.3g} (bound 1e-10); float power "
                                f"{naive:.3g}, informational")
    assert worst <= 1e-10


@pytest.mark.criterion(2, "kernel identity")
def test_kernel_identity(record_property):
    worst = max(abs(character(p, 1, unit(p), n) - 1) for p in PRIMES for n in range(1, 11))
    assert all(canonicalize(1, unit(p)) == zero(p) for p in PRIMES)
    record_property("measured", f"max |chi_n(1,u) - 1| = {worst:.3g} (bound 1e-12)")
    assert worst <= 1e-12


@pytest.mark.criterion(3, "series function well-defined")
def test_f_tilde_well_defined(record_property):
    rng = np.random.default_rng(3)
    shift, tail = 0.0, 0.0
    for p in PRIMES:
        u = unit(p)
        for _ in range(100):
            pt = random_point(rng, p)
            f20, _ = f_tilde_raw(p, pt.t, pt.x, 20)
            moved, _ = f_tilde_raw(p, pt.t + 1, pt.x + u, 20)
            shift = max(shift, abs(moved - f20))
            tail = max(tail, abs(f_tilde(pt, 30)[0] - f20))
    record_property("measured", f"shift {shift:.3g} (bound 1e-12), tail {tail:.3g} "
                                f"(bound {2.0 ** -20:.3g})")
    assert shift <= 1e-12 and tail <= 2.0 ** -20


@pytest.mark.criterion(4, "non-cylindricity witness")
def test_noncylindrical_witness(record_property):
    smallest = math.inf
    for p in PRIMES:
        for n in range(1, 11):
            w = noncylindrical_witness(p, n)
            assert all(chi_phase(w.a, k) == chi_phase(w.b, k) for k in range(1, n + 1))
            fa, ta = f_tilde(w.a, 40)
            fb, tb = f_tilde(w.b, 40)
            gap = abs(fa - fb) - ta - tb
            smallest = min(smallest, gap)
    record_property("measured", f"smallest certified gap {smallest:.3g} (bound > 1e-6)")
    assert smallest > 1e-6


@pytest.mark.criterion(5, "p-adic ring axioms")
def test_padic_ring_axioms(record_property):
    rng = np.random.default_rng(5)
    depth = 32
    for k in range(1000):
        p = PRIMES[k % 3]
        mod = p ** depth
        a, b, c = (random_padic(rng, p) for _ in range(3))
        r = {name: v.project(depth) for name, v in (("a", a), ("b", b), ("c", c))}
        checks = [
            ((a + b) + c, a + (b + c)), (a + b, b + a), ((a * b) * c, a * (b * c)),
            (a * b, b * a), (a * (b + c), a * b + a * c), (a + 0, a), (a * 1, a),
            (a + (-a), from_integer(0, p)),
        ]
        for lhs, rhs in checks:
            assert lhs.project(depth) == rhs.project(depth)
        # residues mod p^depth form an independent oracle
        assert (a + b).project(depth) == (r["a"] + r["b"]) % mod
        assert (a * b * c).project(depth) == r["a"] * r["b"] * r["c"] % mod
        m, n = (int(v) for v in rng.integers(-10 ** 15, 10 ** 15, 2))
        assert from_integer(m, p) + from_integer(n, p) == from_integer(m + n, p)
        assert from_integer(m, p) * from_integer(n, p) == from_integer(m * n, p)
    record_property("measured", "1000 triples exact at depth 32; from_integer exact")


@pytest.mark.criterion(6, "special curve")
def test_special_curve(record_property):
    c = special_curve(lambda n: float(n) ** -n, 0.0, Euclidean(1), rho=1.0)
    interp = max(abs(float(c.coords(2.0 ** -n)[0]) - float(n) ** -n) for n in range(1, 21))
    dd = dyadic_divided_differences(c, 3, 20)
    ratio = max(dd) / dd[0]
    record_property("measured", f"node error {interp:.3g} (bound 1e-12), third-difference "
                                f"max/coarsest {ratio:.3g} (bound 10)")
    assert interp <= 1e-12 and ratio < 10


@pytest.mark.criterion(7, "differential consistency")
def test_differential_consistency(record_property):
    rng = np.random.default_rng(7)
    fam = torus_family(4)
    rel, geo = 0.0, 0.0
    h = 1e-5
    for _ in range(200):
        level = frozenset(int(k) for k in rng.choice(np.arange(1, 5), int(rng.integers(1, 5)),
                                                      replace=False))
        f = random_level_function(fam, level, rng)
        angles = rng.uniform(0, TWO_PI, 4)
        th = torus_thread(fam, angles)
        v = lift_tangent(th, level, rng.normal(size=len(level)))
        d = differential(f, v)
        c0, w = np.array(th(level), dtype=float), np.asarray(v(level))
        cd = (f.value(tuple(c0 + h * w)) - f.value(tuple(c0 - h * w))) / (2 * h)
        rel = max(rel, abs(d - cd) / max(abs(cd), 1e-300))
        geo = max(geo, abs(geodesic_differential(f, th, v) - d))
    record_property("measured", f"relative error {rel:.3g} (bound 1e-6), geodesic gap "
                                f"{geo:.3g} (bound 1e-8)")
    assert rel <= 1e-6 and geo <= 1e-8


@pytest.mark.criterion(8, "derivation round trip")
def test_derivation_round_trip(record_property):
    rng = np.random.default_rng(8)
    tower = make_builtin_family("PowerMapTower", p=2)
    X = lift_field(tower, 1, lambda x: np.array([math.sin(TWO_PI * x[0]) + 1.5]))
    R = fields_from_derivation(derivation_from_fields(X), tower, range(1, 6), seed=8)
    err = max(abs(R.at(m, x)[0] - X.at(m, x)[0]) for m in range(1, 6)
              for x in rng.uniform(0, 1, 20))
    fam = torus_family(3)
    base = frozenset({1, 2})
    Y = product_field(fam, base, ["sin(x2) + 0.5", "cos(x1)*sin(x2)"])
    levels = [base, frozenset({1, 2, 3})]
    S = fields_from_derivation(derivation_from_fields(Y), fam, levels, seed=8)
    for j in levels:
        for _ in range(20):
            pt = tuple(rng.uniform(0, TWO_PI, len(j)))
            err = max(err, float(np.max(np.abs(S.at(j, pt) - Y.at(j, pt)))))
    leib = max(audit_derivation(derivation_from_fields(X), tower, 3, pairs=64, seed=1),
               audit_derivation(derivation_from_fields(Y), fam, frozenset({1, 2, 3}),
                                pairs=64, seed=1))
    record_property("measured", f"round trip {err:.3g} (bound 1e-9), Leibniz {leib:.3g} "
                                f"(bound 1e-9)")
    assert err <= 1e-9 and leib <= 1e-9


@pytest.mark.criterion(9, "bracket coherence")
def test_bracket_coherence(record_property):
    tower = make_builtin_family("PowerMapTower", p=2)
    X = lift_field(tower, 1, lambda x: np.array([math.sin(TWO_PI * x[0])]))
    Y = lift_field(tower, 1, lambda x: np.array([math.cos(TWO_PI * x[0]) + 0.5]))
    push = check_field_coherence(lie_bracket(X, Y), [(1, 2), (1, 3), (2, 4), (3, 5)], samples=20)
    fam = torus_family(3)
    lev = frozenset({1, 2, 3})
    A = product_field(fam, lev, ["sin(x2) + 0.5*cos(x3)", "cos(x1)", "sin(x1 + x3)"])
    B = product_field(fam, lev, ["cos(2*x3)", "sin(x1)*cos(x2)", "0.3"])
    C = product_field(fam, lev, ["sin(x1 - x2)", "0", "cos(x2)^2"])
    J = add_fields(add_fields(lie_bracket(A, lie_bracket(B, C)), lie_bracket(B, lie_bracket(C, A))),
                   lie_bracket(C, lie_bracket(A, B)))
    rng = np.random.default_rng(9)
    jac = max(float(np.max(np.abs(J.at(lev, tuple(rng.uniform(0, TWO_PI, 3)))))) for _ in range(50))
    record_property("measured", f"pushforward {push:.3g} (bound 1e-8), Jacobi {jac:.3g} "
                                f"(bound 1e-6)")
    assert push <= 1e-8 and jac <= 1e-6


def random_connection(rng, terms=3):
    omega = rng.uniform(-2, 2, (2, terms, 2))
    phase = rng.uniform(0, TWO_PI, (2, terms))
    amp = rng.normal(size=(2, terms))

    def comp(x):
        return np.array([amp[d] @ np.sin(omega[d] @ x + phase[d]) for d in range(2)])

    return ConnectionU1(2, comp, label="random")


def gauge_graph():
    return Graph([Edge.trig("a", [[0.2, -0.5, 0.1], [0.0, 0.0, 0.3]], [[0.4, 0.0], [1.0, -0.2]]),
                  Edge.polyline("b", [[2, 0], [2, 1], [3, 1]]),
                  Edge.segment("c", [3, -1], [4, 2])])


@pytest.mark.criterion(10, "holonomy")
def test_holonomy(record_property):
    rng = np.random.default_rng(10)
    tol = 1e-10
    graph = gauge_graph()
    hom = 0.0
    for _ in range(5):
        A = random_connection(rng)
        for e in graph.edges:
            s = float(rng.uniform(0.2, 0.8))
            left, right = e.restrict(0, s, "l"), e.restrict(s, 1, "r")
            whole = holonomy(A, e, tol)
            hom = max(hom, abs(holonomy(A, left.concat(right), tol) - whole),
                      abs(holonomy(A, left, tol) * holonomy(A, right, tol) - whole),
                      abs(holonomy(A, e.reversed(), tol) * whole - 1))
    A = random_connection(rng)
    base = project_connection(A, graph, tol)
    chain, current, sub = identity_refinement(graph), graph, 0.0
    for _ in range(4):
        eid = current.ids[int(rng.integers(len(current.ids)))]
        step = refine_graph(current, eid, float(rng.uniform(0.2, 0.8)))
        chain, current = chain.compose(step), step.fine
        back = chain(project_connection(A, current, tol))
        sub = max(sub, max(abs(back[e] - base[e]) for e in graph.ids))
    cert = 0.0
    for _ in range(50):
        A = random_connection(rng)
        chi = Character({eid: int(rng.integers(-3, 4)) for eid in graph.ids})
        cert = max(cert, lambda_certificate(A, chi, graph, tol)["gap"])
    record_property("measured", f"homomorphism {hom:.3g}, subdivision {sub:.3g}, "
                                f"certificate {cert:.3g} (bounds 1e-8)")
    assert hom <= 1e-8 and sub <= 1e-8 and cert <= 1e-8


@pytest.mark.criterion(11, "Boman harness")
def test_boman_harness(record_property):
    fam = torus_family(10)
    f = cyl_from_expression(fam, frozenset({1, 2, 3}), "cos(x1)*sin(x2) + 0.5*cos(x1 + 2*x3)")
    good = boman_harness(fam, f, trials=50, seed=11, order=4)

    def planted(x):
        # jumps where the fourth angle crosses pi
        return 1.0 if (x[3] % TWO_PI) < math.pi else 0.0

    bad = boman_harness(fam, planted, trials=50, seed=11, order=4)
    record_property("measured", f"cylindrical {good.trials - good.failures}/{good.trials} pass "
                                f"(max ratio {good.max_ratio:.3g}), planted step fails "
                                f"{bad.failures}/{bad.trials}")
    assert good.passed and bad.failures >= 1


@pytest.mark.criterion(12, "component classifier")
def test_component_classifier(record_property):
    rng = np.random.default_rng(12)
    N, B = 16, 100
    ones = parse_padic("|1", 3)
    checked = 0
    for k in range(40):
        p = PRIMES[k % 3]
        x = random_padic(rng, p) if k % 2 else PadicInt.from_generator(
            lambda i, s=int(rng.integers(1 << 30)): (s >> (i % 30)) % p, p)
        for m in range(-B, B + 1, 7):
            v = same_component_mod_uZ(x, x + m, N, B)
            assert v.verdict != DIFFERENT and (v.verdict != SAME or v.m == m)
            w = same_component_mod_uZ(x + m, x, N, B)
            assert w.verdict == v.verdict and (v.verdict != SAME or w.m == -v.m)
            checked += 2
        m1, m2 = (int(t) for t in rng.integers(-50, 51, 2))
        a, b, c = x, x + m1, x + m1 + m2
        if (same_component_mod_uZ(a, b, N, B).verdict == SAME
                and same_component_mod_uZ(b, c, N, B).verdict == SAME):
            assert same_component_mod_uZ(a, c, N, B).verdict == SAME
        if p == 3:
            assert same_component_mod_uZ(x, x + ones, N, B).verdict == DIFFERENT
    record_property("measured", f"{checked} shift queries never 'different'; base-3 all-ones "
                                f"shift separated")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
