"""Level manifolds for projective families.

Points are plain Python values so that exact types survive arithmetic:
one-dimensional spaces store a scalar (``float`` or ``Fraction``), higher
dimensional ones a flat tuple of coordinates.  Tangent vectors and
coordinate charts are ``numpy`` arrays.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Any, Sequence

import numpy as np

Point = Any


class LevelSpace:
    """Common interface of the level spaces."""

    kind: str = "abstract"

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def size(self) -> int:
        """Number of stored coordinates (equals ``dimension`` unless discrete)."""
        return self.dimension

    @property
    def continuous(self) -> bool:
        return True

    def wrap(self, raw: Point) -> Point:
        raise NotImplementedError

    def distance(self, p: Point, q: Point) -> float:
        raise NotImplementedError

    def coords(self, point: Point) -> np.ndarray:
        return np.atleast_1d(np.asarray(point, dtype=float)).copy()

    def from_coords(self, arr: Sequence[float]) -> Point:
        raise NotImplementedError

    def difference(self, p: Point, q: Point) -> np.ndarray:
        """Coordinate displacement taking ``q`` to ``p`` (shortest on circles)."""
        return self.coords(p) - self.coords(q)

    def sample(self, rng: np.random.Generator) -> Point:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _circle_wrap(x, period):
    if isinstance(x, complex):
        x = cmath.phase(x) / (2 * math.pi) * period
    if isinstance(x, (int, Fraction)) and isinstance(period, (int, Fraction)):
        return Fraction(x) % period
    x = float(x) % float(period)
    # float modulo can round up to the period itself
    return 0.0 if x >= period else x


def _circle_dist(a, b, period) -> float:
    d = abs(a - b) % period
    return float(min(d, period - d))


def _circle_delta(a, b, period) -> float:
    d = float((a - b) % period)
    return d - period if d > period / 2 else d


@dataclass(frozen=True)
class Euclidean(LevelSpace):
    dim: int = 1
    kind = "Euclidean"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    @property
    def dimension(self) -> int:
        return self.dim

    def wrap(self, raw):
        if self.dim == 1:
            return float(np.asarray(raw, dtype=float).reshape(-1)[0])
        return tuple(float(v) for v in raw)

    def distance(self, p, q) -> float:
        return float(np.linalg.norm(self.coords(p) - self.coords(q)))

    def from_coords(self, arr):
        return self.wrap(arr)

    def sample(self, rng):
        return self.wrap(rng.uniform(-3.0, 3.0, self.dim))

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim}


@dataclass(frozen=True)
class Circle(LevelSpace):
    """The circle R/(period Z); points are representatives in [0, period)."""

    period: Any = 1
    kind = "Circle"

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")

    @property
    def dimension(self) -> int:
        return 1

    def wrap(self, raw):
        return _circle_wrap(raw, self.period)

    def distance(self, p, q) -> float:
        return _circle_dist(p, q, self.period)

    def difference(self, p, q):
        return np.array([_circle_delta(p, q, self.period)])

    def from_coords(self, arr):
        return self.wrap(float(np.asarray(arr, dtype=float).reshape(-1)[0]))

    def sample(self, rng):
        return self.wrap(rng.uniform(0.0, float(self.period)))

    def to_complex(self, point) -> complex:
        return cmath.exp(2j * math.pi * float(point) / float(self.period))

    def to_json(self):
        return {"kind": self.kind, "period": float(self.period)}


@dataclass(frozen=True)
class Torus(LevelSpace):
    periods: tuple = (2 * math.pi,)
    kind = "Torus"

    def __post_init__(self):
        if not self.periods or any(t <= 0 for t in self.periods):
            raise ValueError("torus needs positive periods")

    @property
    def dimension(self) -> int:
        return len(self.periods)

    def wrap(self, raw):
        return tuple(_circle_wrap(x, t) for x, t in zip(raw, self.periods, strict=True))

    def distance(self, p, q) -> float:
        return math.sqrt(sum(_circle_dist(a, b, t) ** 2 for a, b, t in zip(p, q, self.periods)))

    def difference(self, p, q):
        return np.array([_circle_delta(a, b, t) for a, b, t in zip(p, q, self.periods)])

    def from_coords(self, arr):
        return self.wrap([float(v) for v in arr])

    def sample(self, rng):
        return self.wrap([rng.uniform(0.0, float(t)) for t in self.periods])

    def to_json(self):
        return {"kind": self.kind, "periods": [float(t) for t in self.periods]}


@dataclass(frozen=True)
class CyclicGroup(LevelSpace):
    """Z/modulus Z, a zero-dimensional level."""

    modulus: int = 2
    kind = "CyclicGroup"

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")

    @property
    def dimension(self) -> int:
        return 0

    @property
    def size(self) -> int:
        return 1

    @property
    def continuous(self) -> bool:
        return False

    def wrap(self, raw):
        return int(raw) % self.modulus

    def distance(self, p, q) -> float:
        d = (p - q) % self.modulus
        return float(min(d, self.modulus - d))

    def from_coords(self, arr):
        return self.wrap(int(round(float(np.asarray(arr).reshape(-1)[0]))))

    def sample(self, rng):
        return int(rng.integers(0, self.modulus))

    def to_json(self):
        return {"kind": self.kind, "modulus": self.modulus}


def jet_size(order: int, source_dim: int, target_dim: int) -> int:
    """Number of Taylor coefficients up to ``order`` of a map R^m -> R^n."""
    return target_dim * math.comb(source_dim + order, order)


def jet_multi_indices(order: int, source_dim: int) -> list[tuple[int, ...]]:
    """Multi-indices (as sorted variable tuples) ordered by degree."""
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        out.extend(combinations_with_replacement(range(source_dim), deg))
    return out


@dataclass(frozen=True)
class JetCoefficients(LevelSpace):
    """Taylor coefficients up to ``order`` at a fixed source point.

    Coefficients are ordered by total degree, so truncation to a lower
    order is a prefix.
    """

    order: int = 1
    source_dim: int = 1
    target_dim: int = 1
    kind = "JetCoefficients"

    def __post_init__(self):
        if self.order < 0 or self.source_dim < 1 or self.target_dim < 1:
            raise ValueError("jet order must be >= 0 and dimensions positive")

    @property
    def dimension(self) -> int:
        return jet_size(self.order, self.source_dim, self.target_dim)

    def wrap(self, raw):
        vals = tuple(float(v) for v in raw)
        if len(vals) != self.dimension:
            raise ValueError(f"expected {self.dimension} jet coefficients, got {len(vals)}")
        return vals

    def distance(self, p, q) -> float:
        return float(np.linalg.norm(np.subtract(p, q)))

    def from_coords(self, arr):
        return self.wrap(arr)

    def sample(self, rng):
        return self.wrap(rng.normal(size=self.dimension))

    def to_json(self):
        return {"kind": self.kind, "order": self.order, "source_dim": self.source_dim,
                "target_dim": self.target_dim}


@dataclass(frozen=True)
class FiniteProduct(LevelSpace):
    """Product of level spaces with points stored as one flat tuple."""

    factors: tuple = ()
    kind = "FiniteProduct"

    @property
    def dimension(self) -> int:
        return sum(f.dimension for f in self.factors)

    @property
    def size(self) -> int:
        return sum(f.size for f in self.factors)

    @property
    def continuous(self) -> bool:
        return all(f.continuous for f in self.factors)

    def split(self, point) -> list:
        """Cut a flat point into factor points."""
        out, k = [], 0
        flat = tuple(point)
        for f in self.factors:
            chunk = flat[k:k + f.size]
            out.append(chunk[0] if f.size == 1 else chunk)
            k += f.size
        if k != len(flat):
            raise ValueError(f"expected {k} coordinates, got {len(flat)}")
        return out

    @staticmethod
    def _flatten(parts) -> tuple:
        flat: list = []
        for part in parts:
            if isinstance(part, tuple):
                flat.extend(part)
            else:
                flat.append(part)
        return tuple(flat)

    def wrap(self, raw):
        return self._flatten(f.wrap(x) for f, x in zip(self.factors, self.split(raw)))

    def distance(self, p, q) -> float:
        return math.sqrt(sum(f.distance(a, b) ** 2
                             for f, a, b in zip(self.factors, self.split(p), self.split(q))))

    def coords(self, point):
        return np.concatenate([f.coords(x) for f, x in zip(self.factors, self.split(point))]) \
            if self.factors else np.zeros(0)

    def difference(self, p, q):
        parts = [f.difference(a, b) for f, a, b in zip(self.factors, self.split(p), self.split(q))]
        return np.concatenate(parts) if parts else np.zeros(0)

    def from_coords(self, arr):
        arr = np.asarray(arr, dtype=float)
        parts, k = [], 0
        for f in self.factors:
            parts.append(f.from_coords(arr[k:k + f.size]))
            k += f.size
        return self._flatten(parts)

    def sample(self, rng):
        return self._flatten(f.sample(rng) for f in self.factors)

    def to_json(self):
        return {"kind": self.kind, "factors": [f.to_json() for f in self.factors]}


def space_from_json(obj: dict) -> LevelSpace:
    kind = obj.get("kind")
    if kind == "Euclidean":
        return Euclidean(int(obj.get("dim", 1)))
    if kind == "Circle":
        return Circle(obj.get("period", 1))
    if kind == "Torus":
        return Torus(tuple(obj["periods"]))
    if kind == "CyclicGroup":
        return CyclicGroup(int(obj["modulus"]))
    if kind == "JetCoefficients":
        return JetCoefficients(int(obj["order"]), int(obj["source_dim"]), int(obj["target_dim"]))
    if kind == "FiniteProduct":
        return FiniteProduct(tuple(space_from_json(f) for f in obj["factors"]))
    raise ValueError(f"unknown level space kind {kind!r}")


def coordinate_periods(space: LevelSpace) -> list:
    """Period of each tangent coordinate, ``None`` for a line coordinate."""
    if isinstance(space, Circle):
        return [space.period]
    if isinstance(space, Torus):
        return list(space.periods)
    if isinstance(space, FiniteProduct):
        return [t for f in space.factors for t in coordinate_periods(f)]
    if isinstance(space, CyclicGroup):
        return []
    return [None] * space.dimension
