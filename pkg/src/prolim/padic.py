"""Exact arithmetic in the p-adic integers Delta_p = lim Z/p^n Z.

A :class:`PadicInt` is either *closed* (a rational with denominator prime
to ``p``, i.e. an eventually periodic digit stream) or *lazy* (an arbitrary
residue function ``n -> x mod p^n``).  Closed values are exact at every
depth; lazy values are exact at every depth that is actually requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

SAME, DIFFERENT, UNDECIDED = "same", "different", "undecided"
MAX_PERIOD = 4096  # cap on the digit cycle search used for display


class _Atom:
    """An opaque lazy element; identity matters, not value."""

    __slots__ = ("residue", "__weakref__")

    def __init__(self, residue: Callable[[int], int]):
        self.residue = lru_cache(maxsize=None)(residue)


class PadicInt:
    """Element of Delta_p: a closed rational part plus a formal integer-linear
    combination of lazy atoms.

    Keeping lazy values linear lets differences such as ``(a + 5) - a``
    cancel exactly even when ``a`` has no closed form.
    """

    __slots__ = ("p", "_value", "_terms")

    def __init__(self, p: int, value=0, terms: dict | None = None):
        if p < 2:
            raise ValueError("base p must be at least 2")
        value = Fraction(value)
        if math.gcd(value.denominator, p) != 1:
            raise ValueError(f"{value} is not a {p}-adic integer")
        self.p = p
        self._value = value
        self._terms = {a: Fraction(c) for a, c in (terms or {}).items() if c != 0}

    # constructors -------------------------------------------------------

    @classmethod
    def from_integer(cls, m: int, p: int) -> "PadicInt":
        return cls(p, int(m))

    @classmethod
    def from_rational(cls, q, p: int) -> "PadicInt":
        return cls(p, Fraction(q))

    @classmethod
    def from_digits(cls, prefix: Sequence[int], block: Sequence[int], p: int) -> "PadicInt":
        """Digits ``prefix`` followed by ``block`` repeated forever."""
        if not block:
            raise ValueError("tail block must be nonempty")
        for d in (*prefix, *block):
            if not 0 <= d < p:
                raise ValueError(f"digit {d} out of range for base {p}")
        head = sum(d * p ** k for k, d in enumerate(prefix))
        cyc = sum(d * p ** k for k, d in enumerate(block))
        tail = Fraction(cyc, 1 - p ** len(block))
        return cls(p, head + p ** len(prefix) * tail)

    @classmethod
    def from_generator(cls, digit: Callable[[int], int], p: int,
                       prefix: Sequence[int] = ()) -> "PadicInt":
        """Lazy element whose k-th digit is ``prefix[k]`` or else ``digit(k)``."""
        prefix = tuple(prefix)

        def dig(k):
            d = prefix[k] if k < len(prefix) else int(digit(k))
            if not 0 <= d < p:
                raise ValueError(f"digit {d} out of range for base {p}")
            return d

        return cls.from_residues(lambda n: sum(dig(k) * p ** k for k in range(n)), p)

    @classmethod
    def from_residues(cls, residue: Callable[[int], int], p: int) -> "PadicInt":
        """Lazy element from a coherent residue function ``n -> x mod p^n``."""
        return cls(p, 0, {_Atom(residue): 1})

    # basic queries ------------------------------------------------------

    @property
    def is_closed(self) -> bool:
        return not self._terms

    @property
    def value(self) -> Fraction:
        if self._terms:
            raise ValueError("lazy p-adic integer has no closed value")
        return self._value

    @staticmethod
    def _reduce(q: Fraction, mod: int) -> int:
        return q.numerator * pow(q.denominator, -1, mod) % mod

    def project(self, n: int) -> int:
        """Residue modulo ``p**n``."""
        if n < 0:
            raise ValueError("depth must be nonnegative")
        if n == 0:
            return 0
        mod = self.p ** n
        r = self._reduce(self._value, mod)
        for atom, c in self._terms.items():
            r += self._reduce(c, mod) * atom.residue(n)
        return r % mod

    def digit(self, k: int) -> int:
        return self.project(k + 1) // self.p ** k

    def digits(self, n: int) -> list[int]:
        r = self.project(n)
        out = []
        for _ in range(n):
            r, d = divmod(r, self.p)
            out.append(d)
        return out

    def is_integer(self) -> bool | None:
        """Membership in Z; ``None`` when undecidable (lazy part present)."""
        return self._value.denominator == 1 if self.is_closed else None

    @property
    def tail(self) -> tuple:
        """``("constant", d)``, ``("periodic", block)`` or ``("generator", None)``."""
        if not self.is_closed:
            return ("generator", None)
        _, block = self.closed_digits()
        if block is None:
            return ("generator", None)
        return ("constant", block[0]) if len(block) == 1 else ("periodic", tuple(block))

    def closed_digits(self, max_period: int = MAX_PERIOD):
        """Minimal (prefix, block) of a closed value, or (digits, None) past the cap."""
        q, p = self.value, self.p
        num, den = q.numerator, q.denominator
        seen: dict[int, int] = {}
        digits: list[int] = []
        # the remaining value num/den determines the rest of the stream
        while num not in seen and len(digits) <= max_period + 64:
            seen[num] = len(digits)
            d = num * pow(den, -1, p) % p
            digits.append(d)
            num = (num - d * den) // p
        if num not in seen:
            return digits, None
        start = seen[num]
        return digits[:start], digits[start:]

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, (int, Fraction)):
            return PadicInt(self.p, other)
        if not isinstance(other, PadicInt):
            return NotImplemented
        if other.p != self.p:
            raise ValueError(f"base mismatch: {self.p} vs {other.p}")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for a, c in other._terms.items():
            terms[a] = terms.get(a, 0) + c
        return PadicInt(self.p, self._value + other._value, terms)

    __radd__ = __add__

    def __neg__(self):
        return PadicInt(self.p, -self._value, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_closed:
            s = other._value
            return PadicInt(self.p, self._value * s, {a: c * s for a, c in self._terms.items()})
        if self.is_closed:
            return other * self
        a, b, p = self, other, self.p
        return PadicInt.from_residues(lambda n: a.project(n) * b.project(n) % p ** n, p)

    __rmul__ = __mul__

    def equals_to_depth(self, other, n: int) -> bool:
        other = self._coerce(other)
        return self.project(n) == other.project(n)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PadicInt(self.p, other)
        if not isinstance(other, PadicInt) or other.p != self.p:
            return NotImplemented
        d = self - other
        if d.is_closed:
            return d._value == 0
        raise ValueError("equality of lazy p-adic integers is only decidable to a depth; "
                         "use equals_to_depth")

    def __hash__(self):
        if not self.is_closed:
            raise TypeError("lazy p-adic integers are unhashable")
        return hash((self.p, self._value))

    def __repr__(self):
        return f"PadicInt({format_padic(self)!r}, p={self.p})"

    def __str__(self):
        return format_padic(self)


def from_integer(m: int, p: int) -> PadicInt:
    return PadicInt.from_integer(m, p)


def project(a: PadicInt, n: int) -> int:
    if n < 1:
        raise ValueError("depth must be >= 1")
    return a.project(n)


def unit(p: int) -> PadicInt:
    """The element u with digits 1, 0, 0, ..."""
    return PadicInt.from_integer(1, p)


# text form -----------------------------------------------------------------


def parse_padic(text: str, p: int) -> PadicInt:
    """Parse ``"d0 d1 ... | b0 b1 ..."``; a bare integer is also accepted.

    >>> str(parse_padic("1|0", 2) + parse_padic("1|0", 2))
    '0 1|0'
    """
    text = text.strip()
    if "|" not in text:
        try:
            return PadicInt.from_integer(int(text), p)
        except ValueError:
            raise ValueError(f"cannot parse p-adic integer {text!r}") from None
    head, _, tail = text.partition("|")
    try:
        prefix = [int(tok) for tok in head.split()]
        block = [int(tok) for tok in tail.split()]
    except ValueError:
        raise ValueError(f"cannot parse p-adic integer {text!r}") from None
    return PadicInt.from_digits(prefix, block, p)


def format_padic(a: PadicInt, depth: int = 16) -> str:
    if a.is_closed:
        prefix, block = a.closed_digits()
        if block is not None:
            return " ".join(map(str, prefix)) + "|" + " ".join(map(str, block))
    return " ".join(map(str, a.digits(depth))) + " |?"


# component classification ----------------------------------------------------


@dataclass(frozen=True)
class ComponentVerdict:
    verdict: str
    m: int | None = None
    depth: int = 0
    bound: int = 0

    @property
    def same(self) -> bool:
        return self.verdict == SAME


def same_component_mod_uZ(a: PadicInt, b: PadicInt, depth: int, bound: int) -> ComponentVerdict:
    """Decide whether ``b = a + m u`` for an integer ``m``.

    Closed differences are decided exactly; lazy ones by bounded search over
    ``|m| <= bound`` against the residue at ``depth``.  The verdict carries
    the witness ``m``.
    """
    if depth < 1 or bound < 0:
        raise ValueError("depth must be >= 1 and bound >= 0")
    d = b - a
    if d.is_closed:
        v = d.value
        if v.denominator == 1:
            return ComponentVerdict(SAME, int(v), depth, bound)
        return ComponentVerdict(DIFFERENT, None, depth, bound)
    mod = d.p ** depth
    r = d.project(depth)
    # candidates m = r + k*mod with |m| <= bound, smallest |m| first
    cands = sorted((m for m in range(r - mod * ((r + bound) // mod), bound + 1, mod)
                    if abs(m) <= bound), key=lambda m: (abs(m), m))
    if not cands:
        return ComponentVerdict(DIFFERENT, None, depth, bound)
    return ComponentVerdict(UNDECIDED, cands[0], depth, bound)
