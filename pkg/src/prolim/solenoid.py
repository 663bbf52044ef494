"""The p-adic solenoid (R x Delta_p)/B and the divisibility solenoid.

The real coordinate is kept as an exact :class:`~fractions.Fraction` (floats
convert exactly), so character phases ``(t - x mod p^n)/p^n`` are exact
rationals and the group law is exact on stored representatives.  Complex
values are produced only at the very end.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .family import ProjectiveFamily, Thread, make_builtin_family
from .padic import ComponentVerdict, PadicInt, same_component_mod_uZ, unit
from .spaces import CyclicGroup, Euclidean, FiniteProduct
from .family import NaturalOrder


def _exact(t) -> Fraction:
    if isinstance(t, Fraction):
        return t
    if isinstance(t, int):
        return Fraction(t)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    return Fraction(t)


@dataclass(frozen=True, eq=False)
class SolenoidPoint:
    """Canonical representative ``(t, x)`` with ``0 <= t < 1`` of a class mod B."""

    p: int
    t: Fraction
    x: PadicInt

    def __eq__(self, other):
        if not isinstance(other, SolenoidPoint):
            return NotImplemented
        return self.p == other.p and self.t == other.t and self.x == other.x

    def __hash__(self):
        return hash((self.p, self.t, self.x))

    @property
    def t_float(self) -> float:
        return float(self.t)

    def __add__(self, other):
        return group_add(self, other)

    def __neg__(self):
        return group_neg(self)

    def __sub__(self, other):
        return group_add(self, group_neg(other))


def canonicalize(t, x: PadicInt | int, p: int | None = None) -> SolenoidPoint:
    """Normal form of the class of ``(t, x)`` modulo ``B = <(1, u)>``.

    With ``k = floor(t)`` the representative is ``(t - k, x - k u)``.
    """
    if not isinstance(x, PadicInt):
        if p is None:
            raise ValueError("base p required for an integer x")
        x = PadicInt.from_integer(x, p)
    t = _exact(t)
    k = math.floor(t)
    return SolenoidPoint(x.p, t - k, x - k)


def group_add(a: SolenoidPoint, b: SolenoidPoint) -> SolenoidPoint:
    if a.p != b.p:
        raise ValueError(f"base mismatch: {a.p} vs {b.p}")
    return canonicalize(a.t + b.t, a.x + b.x)


def group_neg(a: SolenoidPoint) -> SolenoidPoint:
    return canonicalize(-a.t, -a.x)


def zero(p: int) -> SolenoidPoint:
    return canonicalize(0, PadicInt.from_integer(0, p))


# characters -------------------------------------------------------------------


def character_phase(t, x: PadicInt, n: int) -> Fraction:
    """Exact phase in turns of ``chi_n(t, x) = exp(2 pi i (t - x mod p^n) / p^n)``."""
    if n < 1:
        raise ValueError("character index n must be >= 1")
    q = x.p ** n
    return ((_exact(t) - x.project(n)) / q) % 1


def turns_to_unit(phase) -> complex:
    return cmath.exp(2j * math.pi * float(phase))


def chi_phase(point: SolenoidPoint, n: int) -> Fraction:
    return character_phase(point.t, point.x, n)


def chi_n(point: SolenoidPoint, n: int) -> complex:
    return turns_to_unit(chi_phase(point, n))


def character(p: int, t, x: PadicInt | int, n: int) -> complex:
    """``chi_n`` on a raw (not canonicalized) pair of R x Delta_p."""
    if not isinstance(x, PadicInt):
        x = PadicInt.from_integer(x, p)
    return turns_to_unit(character_phase(t, x, n))


def power_tower(p: int) -> ProjectiveFamily:
    return make_builtin_family({"kind": "PowerMapTower", "p": p})


def to_thread(point: SolenoidPoint, family: ProjectiveFamily | None = None) -> Thread:
    """The thread ``n -> chi_n(point)`` in the circle tower (points in turns)."""
    family = family or power_tower(point.p)
    return Thread(family, lambda n: chi_phase(point, n))


def real_padic_family(p: int) -> ProjectiveFamily:
    """Levels ``R x Z/p^n Z`` whose limit is ``R x Delta_p``."""
    def level(n):
        return FiniteProduct((Euclidean(1), CyclicGroup(p ** n)))

    return ProjectiveFamily(NaturalOrder(1), level,
                            lambda i, j, pt: (pt[0], int(pt[1]) % p ** i),
                            name=f"RxPadic({p})", descriptor={"kind": "RxPadic", "p": p},
                            analytic=True)


def character_level_map(p: int) -> Callable:
    """``chi_n`` as a map from level n of :func:`real_padic_family` to the circle."""
    def phi(n, pt):
        t, r = pt
        return ((_exact(t) - int(r)) / p ** n) % 1
    return phi


# leaves and components ----------------------------------------------------------


def leaf_curve(x: PadicInt) -> Callable[[float], SolenoidPoint]:
    """``eta_x(s) = [(s, x)]``, the path component through ``(0, x)``."""
    return lambda s: canonicalize(s, x)


@dataclass(frozen=True)
class ComponentLabel:
    """Handle for the class of ``point.x`` in Delta_p / uZ."""

    point: SolenoidPoint
    depth: int
    bound: int

    def compare(self, other: "ComponentLabel") -> ComponentVerdict:
        return same_component_mod_uZ(self.point.x, other.point.x,
                                     min(self.depth, other.depth), min(self.bound, other.bound))


def path_component_label(point: SolenoidPoint, depth: int, bound: int) -> ComponentLabel:
    if depth < 1 or bound < 1:
        raise ValueError("depth and bound must be >= 1")
    return ComponentLabel(point, depth, bound)


def same_path_component(a: SolenoidPoint, b: SolenoidPoint, depth: int = 16,
                        bound: int = 100) -> ComponentVerdict:
    return path_component_label(a, depth, bound).compare(path_component_label(b, depth, bound))


# the non-cylindrical series ------------------------------------------------------


def f_tilde_raw(p: int, t, x: PadicInt, N: int) -> tuple[float, float]:
    """Partial sum ``sum_{n<=N} 2^-n sin(2 pi (t - x mod p^n)/p^n)`` and its tail bound."""
    if N < 1:
        raise ValueError("truncation N must be >= 1")
    total = math.fsum(math.sin(2 * math.pi * float(character_phase(t, x, n))) / 2 ** n
                      for n in range(1, N + 1))
    return total, 2.0 ** -N


def f_tilde(point: SolenoidPoint, N: int) -> tuple[float, float]:
    return f_tilde_raw(point.p, point.t, point.x, N)


@dataclass(frozen=True)
class NonCylindricalWitness:
    level: int
    a: SolenoidPoint
    b: SolenoidPoint
    gap: float  # certified lower bound on |f(a) - f(b)|


def noncylindrical_witness(p: int, level: int, N: int = 40, tries: int = 64) -> NonCylindricalWitness:
    """Two points with identical ``chi_1 .. chi_level`` but different series values.

    The points differ only in digit ``x_level``, which no character up to
    ``level`` sees.  The returned gap subtracts both truncation tails.
    """
    best = None
    for k in range(tries):
        t = Fraction(k, tries)
        a = canonicalize(t, 0, p)
        for d in range(1, p):
            b = canonicalize(t, PadicInt.from_integer(d * p ** level, p))
            fa, ea = f_tilde(a, N)
            fb, eb = f_tilde(b, N)
            gap = abs(fa - fb) - ea - eb
            if best is None or gap > best.gap:
                best = NonCylindricalWitness(level, a, b, gap)
    return best


# the divisibility solenoid --------------------------------------------------------


@dataclass(frozen=True)
class SigmaInftyPoint:
    """A point of the divisibility solenoid given by a real lift ``t``."""

    t: Fraction

    def resolver(self, m: int) -> Fraction:
        return self.t % m

    def to_thread(self) -> Thread:
        return Thread(make_builtin_family({"kind": "DivisibilityTower"}), self.resolver)


def sigma_infty_point(t) -> SigmaInftyPoint:
    return SigmaInftyPoint(_exact(t))


def project_to_sigma_p(point: SigmaInftyPoint, p: int) -> SolenoidPoint:
    """Image in the p-adic solenoid: the class of ``(t, 0)``.

    Its circle thread is ``n -> (t mod p^n)/p^n``, the restriction of the
    divisibility thread to powers of ``p`` rescaled to unit period.
    """
    return canonicalize(point.t, PadicInt.from_integer(0, p))


def e_infty_point(t1, t2) -> tuple[SigmaInftyPoint, SigmaInftyPoint]:
    return sigma_infty_point(t1), sigma_infty_point(t2)


__all__ = [
    "SolenoidPoint", "canonicalize", "group_add", "group_neg", "zero", "chi_n", "chi_phase",
    "character", "character_phase", "to_thread", "leaf_curve", "path_component_label",
    "same_path_component", "f_tilde", "f_tilde_raw", "noncylindrical_witness",
    "SigmaInftyPoint", "sigma_infty_point", "project_to_sigma_p", "real_padic_family",
    "character_level_map", "unit", "e_infty_point",
]
