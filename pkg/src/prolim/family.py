"""Projective families of manifolds, threads and limit maps."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator

import numpy as np

from .spaces import (Circle, CyclicGroup, FiniteProduct, JetCoefficients, LevelSpace,
                     jet_size, space_from_json)

DEFAULT_TOL = 1e-12


class CoherenceError(ValueError):
    """A thread or a family of maps fails the coherence condition."""

    def __init__(self, message: str, pair=None, deviation: float | None = None):
        super().__init__(message)
        self.pair = pair
        self.deviation = deviation


class NotDirectedError(ValueError):
    pass


# --------------------------------------------------------------------------
# directed index sets


class IndexOrder:
    """A directed set: ``leq`` is a preorder, ``join`` an upper bound."""

    name = "abstract"

    def leq(self, i, j) -> bool:
        raise NotImplementedError

    def join(self, i, j):
        raise NotImplementedError

    def contains(self, i) -> bool:
        return True

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def sample_chain(self, rng: np.random.Generator, length: int = 3) -> list:
        """Draw ``i <= j <= k ...`` by joining fresh samples."""
        chain = [self.sample(rng)]
        for _ in range(length - 1):
            chain.append(self.join(chain[-1], self.sample(rng)))
        return chain


@dataclass(frozen=True)
class NaturalOrder(IndexOrder):
    start: int = 1
    sample_max: int = 8
    name = "natural"

    def leq(self, i, j):
        return i <= j

    def join(self, i, j):
        return max(i, j)

    def contains(self, i):
        return isinstance(i, (int, np.integer)) and i >= self.start

    def sample(self, rng):
        return int(rng.integers(self.start, self.sample_max + 1))


@dataclass(frozen=True)
class DivisibilityOrder(IndexOrder):
    sample_max: int = 36
    name = "divisibility"

    def leq(self, i, j):
        return j % i == 0

    def join(self, i, j):
        return math.lcm(i, j)

    def contains(self, i):
        return isinstance(i, (int, np.integer)) and i >= 1

    def sample(self, rng):
        return int(rng.integers(1, self.sample_max + 1))


@dataclass(frozen=True)
class FiniteSubsetOrder(IndexOrder):
    """Finite subsets of ``labels`` ordered by inclusion."""

    labels: tuple = ()
    name = "finite-subsets"

    def leq(self, i, j):
        return frozenset(i) <= frozenset(j)

    def join(self, i, j):
        return frozenset(i) | frozenset(j)

    def contains(self, i):
        return frozenset(i) <= frozenset(self.labels)

    def sample(self, rng):
        k = int(rng.integers(1, len(self.labels) + 1))
        return frozenset(int(x) for x in rng.choice(self.labels, size=k, replace=False))


class RestrictedOrder(IndexOrder):
    """The order induced on a subset given by an enumeration of its members.

    ``members`` is a zero-argument callable returning a fresh iterator; it
    may be infinite, in which case searches stop after ``budget`` items.
    """

    name = "restricted"

    def __init__(self, parent: IndexOrder, members: Callable[[], Iterator] | Iterable,
                 budget: int = 256):
        self.parent = parent
        if callable(members):
            self._members = members
        else:
            frozen = list(members)
            self._members = lambda: iter(frozen)
        self.budget = budget

    def members(self, limit: int | None = None) -> list:
        return list(itertools.islice(self._members(), limit or self.budget))

    def leq(self, i, j):
        return self.parent.leq(i, j)

    def contains(self, i):
        return any(m == i for m in self.members())

    def upper_bound(self, i):
        """First member above ``i`` (in the parent order), or ``None``."""
        for m in self.members():
            if self.parent.leq(i, m):
                return m
        return None

    def join(self, i, j):
        k = self.upper_bound(self.parent.join(i, j))
        if k is None:
            raise NotDirectedError(f"no member above {i!r} and {j!r} within {self.budget} items")
        return k

    def sample(self, rng):
        pool = self.members(min(self.budget, 12))
        return pool[int(rng.integers(0, len(pool)))]


# --------------------------------------------------------------------------
# families


class ProjectiveFamily:
    """A family ``{M_j, pi_ij, J}`` with coherent projections.

    ``project_fn(i, j, x)`` maps a point of ``level(j)`` to ``level(i)``.
    ``jacobian_fn(i, j, x)`` is the coordinate matrix of the tangent map;
    when absent it is computed by central differences.
    """

    def __init__(self, order: IndexOrder, level: Callable[[Any], LevelSpace],
                 project_fn: Callable, *, jacobian_fn: Callable | None = None,
                 name: str = "user", descriptor: dict | None = None,
                 tol: float = DEFAULT_TOL, analytic: bool = False):
        self.order = order
        self.level = level
        self.project_fn = project_fn
        self.jacobian_fn = jacobian_fn
        self.name = name
        self.descriptor = descriptor
        self.tol = tol
        self.analytic = analytic

    def __repr__(self):
        return f"ProjectiveFamily({self.name})"

    def project(self, i, j, point):
        if not self.order.leq(i, j):
            raise ValueError(f"indices {i!r} and {j!r} are not comparable")
        return self.project_fn(i, j, point)

    def jacobian(self, i, j, point) -> np.ndarray:
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(i, j, point), dtype=float)
        return self._numeric_jacobian(i, j, point)

    def _numeric_jacobian(self, i, j, point, h: float = 1e-6) -> np.ndarray:
        src, dst = self.level(j), self.level(i)
        x = src.coords(point)
        base = self.project(i, j, point)
        cols = []
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = h
            up = dst.difference(self.project(i, j, src.from_coords(x + e)), base)
            dn = dst.difference(self.project(i, j, src.from_coords(x - e)), base)
            cols.append((up - dn) / (2 * h))
        return np.array(cols).T.reshape(dst.dimension, src.dimension)

    def pushforward(self, i, j, point, vector) -> np.ndarray:
        return self.jacobian(i, j, point) @ np.asarray(vector, dtype=float)

    def sample_point(self, j, rng):
        return self.level(j).sample(rng)

    def to_json(self) -> dict:
        if self.descriptor is None:
            raise ValueError("user-defined family has no descriptor")
        return dict(self.descriptor)


def _power_tower(p: int) -> ProjectiveFamily:
    circle = Circle(1)

    def project(i, j, z):
        # iterate single steps so that pi_ij pi_jk and pi_ik perform identical operations
        for _ in range(j - i):
            z = circle.wrap(p * z)
        return z

    return ProjectiveFamily(NaturalOrder(1), lambda j: circle, project,
                            jacobian_fn=lambda i, j, z: [[float(p) ** (j - i)]],
                            name=f"PowerMapTower({p})",
                            descriptor={"kind": "PowerMapTower", "p": p}, analytic=True)


def _divisibility_tower() -> ProjectiveFamily:
    def project(i, j, x):
        return Circle(i).wrap(x)

    return ProjectiveFamily(DivisibilityOrder(), lambda m: Circle(m), project,
                            jacobian_fn=lambda i, j, x: [[1.0]], name="DivisibilityTower",
                            descriptor={"kind": "DivisibilityTower"}, analytic=True)


def _padic_tower(p: int) -> ProjectiveFamily:
    return ProjectiveFamily(NaturalOrder(1), lambda n: CyclicGroup(p ** n),
                            lambda i, j, x: int(x) % p ** i,
                            jacobian_fn=lambda i, j, x: np.zeros((0, 0)),
                            name=f"PadicTower({p})",
                            descriptor={"kind": "PadicTower", "p": p}, analytic=True)


def _jet_tower(m: int, n: int) -> ProjectiveFamily:
    def jacobian(h, k, x):
        a, b = jet_size(h, m, n), jet_size(k, m, n)
        return np.eye(a, b)

    return ProjectiveFamily(NaturalOrder(0, sample_max=4), lambda k: JetCoefficients(k, m, n),
                            lambda h, k, x: tuple(x[:jet_size(h, m, n)]),
                            jacobian_fn=jacobian, name=f"JetTower({m},{n})",
                            descriptor={"kind": "JetTower", "m": m, "n": n}, analytic=True)


def _product_family(factors: tuple[LevelSpace, ...]) -> ProjectiveFamily:
    labels = tuple(range(1, len(factors) + 1))

    def level(j):
        return FiniteProduct(tuple(factors[t - 1] for t in sorted(j)))

    def project(i, j, x):
        keep = sorted(i)
        parts = level(j).split(x)
        chosen = [parts[sorted(j).index(t)] for t in keep]
        return FiniteProduct._flatten(chosen)

    def jacobian(i, j, x):
        src = sorted(j)
        rows, offs, k = [], {}, 0
        for t in src:
            offs[t] = k
            k += factors[t - 1].dimension
        for t in sorted(i):
            for d in range(factors[t - 1].dimension):
                row = np.zeros(k)
                row[offs[t] + d] = 1.0
                rows.append(row)
        return np.array(rows).reshape(len(rows), k)

    return ProjectiveFamily(FiniteSubsetOrder(labels), level, project, jacobian_fn=jacobian,
                            name=f"ProductFamily({len(factors)})",
                            descriptor={"kind": "ProductFamily",
                                        "factors": [f.to_json() for f in factors]},
                            analytic=True)


def make_builtin_family(desc: dict | str, **params) -> ProjectiveFamily:
    """Build one of the analytic towers from a JSON-style descriptor.

    >>> make_builtin_family({"kind": "PadicTower", "p": 3}).project(2, 3, 10)
    1
    """
    if isinstance(desc, str):
        desc = {"kind": desc, **params}
    kind = desc.get("kind")
    if kind in ("PowerMapTower", "PadicTower"):
        p = int(desc.get("p", 0))
        if p < 2:
            raise ValueError("p must be at least 2")
        return _power_tower(p) if kind == "PowerMapTower" else _padic_tower(p)
    if kind == "DivisibilityTower":
        return _divisibility_tower()
    if kind == "JetTower":
        m, n = int(desc.get("m", 0)), int(desc.get("n", 0))
        if m < 1 or n < 1:
            raise ValueError("jet dimensions must be positive")
        return _jet_tower(m, n)
    if kind == "ProductFamily":
        factors = desc.get("factors")
        if isinstance(factors, int):
            factors = [{"kind": "Circle", "period": 2 * math.pi}] * factors
        if not factors:
            raise ValueError("product family needs at least one factor")
        spaces = tuple(f if isinstance(f, LevelSpace) else space_from_json(f) for f in factors)
        if any(s.dimension < 1 for s in spaces):
            raise ValueError("product factors must have positive dimension")
        return _product_family(spaces)
    raise ValueError(f"unknown family kind {kind!r}")


def torus_family(n: int) -> ProjectiveFamily:
    """Product of ``n`` circles of period 2 pi, indexed by finite subsets of 1..n."""
    return make_builtin_family({"kind": "ProductFamily", "factors": n})


# --------------------------------------------------------------------------
# reports


@dataclass
class CoherenceReport:
    max_deviation: float
    samples: int
    passed: bool
    tol: float
    worst: Any = None
    offending: Any = None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, (frozenset, set)):
                return sorted(v)
            if isinstance(v, tuple):
                return [enc(x) for x in v]
            return v
        return {"max_deviation": self.max_deviation, "samples": self.samples,
                "pass": self.passed, "tol": self.tol, "worst": enc(self.worst),
                "offending": enc(self.offending), "notes": list(self.notes)}


def check_family_coherence(family: ProjectiveFamily, sample_budget: int = 100, seed: int = 0,
                           tol: float | None = None) -> CoherenceReport:
    """Sample chains ``i <= j <= k`` and compare ``pi_ij pi_jk`` with ``pi_ik``."""
    if sample_budget < 1:
        raise ValueError("sample_budget must be >= 1")
    tol = family.tol if tol is None else tol
    rng = np.random.default_rng(seed)
    worst, worst_at, offending, count = 0.0, None, None, 0
    notes = [] if family.analytic else ["surjectivity/submersion: asserted, unverified"]
    for _ in range(sample_budget):
        try:
            i, j, k = family.order.sample_chain(rng, 3)
        except NotDirectedError as exc:
            notes.append(f"no comparable triple: {exc}")
            continue
        x = family.sample_point(k, rng)
        lev_i = family.level(i)
        dev = lev_i.distance(family.project(i, j, family.project(j, k, x)), family.project(i, k, x))
        dev = max(dev, family.level(k).distance(family.project_fn(k, k, x), x))
        count += 1
        if dev > tol and offending is None:
            offending = (i, j, k)
        if dev > worst or worst_at is None:
            worst, worst_at = dev, (i, j, k)
    return CoherenceReport(worst, count, count > 0 and worst <= tol, tol, worst_at, offending,
                           notes)


# --------------------------------------------------------------------------
# threads


class Thread:
    """A coherent family of level points given lazily by a resolver.

    ``verified`` records the index pairs already audited; it is the only
    mutable part of a thread.
    """

    def __init__(self, family: ProjectiveFamily, resolver: Callable[[Any], Any]):
        self.family = family
        self.resolver = resolver
        self.verified: set = set()

    def __call__(self, j):
        return self.resolve(j)

    def resolve(self, j):
        return self.family.level(j).wrap(self.resolver(j))

    def agrees_with(self, other: "Thread", indices: Iterable, tol: float | None = None) -> bool:
        """Equality is only decidable up to a chosen set of levels."""
        tol = self.family.tol if tol is None else tol
        return all(self.family.level(j).distance(self(j), other(j)) <= tol for j in indices)


def _ordered_pairs(order: IndexOrder, indices) -> list:
    idx = list(dict.fromkeys(indices))
    pairs = []
    for b, j in enumerate(idx):
        below = [i for i in idx[:b] if order.leq(i, j) and i != j]
        pairs.extend((i, j) for i in reversed(below))
        # indices listed after j may still sit below it in a partial order
        pairs.extend((i, j) for i in idx[b + 1:] if order.leq(i, j) and i != j)
    return pairs


def check_thread(thread: Thread, index_sample: Iterable, tol: float | None = None) -> CoherenceReport:
    """Audit ``pi_ij x_j = x_i`` on all comparable pairs of ``index_sample``.

    Pairs are visited by increasing upper index and, for each, nearest lower
    index first, so the reported offending pair is the most local one.
    """
    fam = thread.family
    tol = fam.tol if tol is None else tol
    worst, worst_at, offending = 0.0, None, None
    pairs = _ordered_pairs(fam.order, index_sample)
    for i, j in pairs:
        dev = fam.level(i).distance(fam.project(i, j, thread(j)), thread(i))
        if dev > tol and offending is None:
            offending = (i, j)
        if dev <= tol:
            thread.verified.add((i, j))
        if dev > worst or worst_at is None:
            worst, worst_at = dev, (i, j)
    return CoherenceReport(worst, len(pairs), worst <= tol, tol, worst_at, offending)


def make_thread(family: ProjectiveFamily, resolver: Callable, audit: Iterable | None = None,
                tol: float | None = None) -> Thread:
    """Wrap ``resolver`` as a thread, optionally auditing it on ``audit`` levels."""
    thread = Thread(family, resolver)
    if audit is not None:
        report = check_thread(thread, audit, tol)
        if not report.passed:
            raise CoherenceError(f"thread incoherent at pair {report.offending}",
                                 report.offending, report.max_deviation)
    return thread


# --------------------------------------------------------------------------
# limit maps and cofinal restriction


class ThreadMap:
    """The limit ``{x_j} -> {phi_j(x_j)}`` of a projective family of maps."""

    def __init__(self, source: ProjectiveFamily, target: ProjectiveFamily, maps: Callable,
                 cofinal: RestrictedOrder | None = None):
        self.source = source
        self.target = target
        self.maps = maps
        self.cofinal = cofinal

    def level_map(self, i, x_i):
        return self.maps(i, x_i)

    def __call__(self, thread: Thread) -> Thread:
        if self.cofinal is None:
            return Thread(self.target, lambda i: self.maps(i, thread(i)))

        def resolve(i):
            j = self.cofinal.upper_bound(i)
            if j is None:
                raise NotDirectedError(f"no level of the map above {i!r}")
            return self.target.project(i, j, self.maps(j, thread(j)))

        return Thread(self.target, resolve)


def limit_map(source: ProjectiveFamily, target: ProjectiveFamily, maps: Callable,
              cofinal: Iterable | Callable | None = None, budget: int = 50, seed: int = 0,
              tol: float | None = None) -> ThreadMap:
    """Verify ``pi'_ij o phi_j = phi_i o pi_ij`` on samples and return the limit map.

    ``maps(j, x)`` sends a point of ``source.level(j)`` to ``target.level(j)``;
    if it is only defined on a cofinal subset, pass that subset as ``cofinal``.
    """
    tol = target.tol if tol is None else tol
    order = source.order if cofinal is None else RestrictedOrder(source.order, cofinal)
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        i, j = order.sample_chain(rng, 2)
        x = source.sample_point(j, rng)
        lhs = target.project(i, j, maps(j, x))
        rhs = maps(i, source.project(i, j, x))
        dev = target.level(i).distance(lhs, rhs)
        if dev > tol:
            raise CoherenceError(f"maps incoherent at pair {(i, j)}: deviation {dev:.3g}",
                                 (i, j), dev)
    return ThreadMap(source, target, maps, order if cofinal is not None else None)


def restrict_to_cofinal(family: ProjectiveFamily, members: Iterable | Callable,
                        budget: int = 64, seed: int = 0) -> ProjectiveFamily:
    """Restrict ``family`` to the directed subset enumerated by ``members``.

    Directedness is checked on ``budget`` sampled pairs of members;
    cofinality is recorded in the descriptor but not required.
    """
    order = RestrictedOrder(family.order, members)
    pool = order.members(16)
    if not pool:
        raise NotDirectedError("empty index subset")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        a, b = pool[int(rng.integers(len(pool)))], pool[int(rng.integers(len(pool)))]
        order.join(a, b)  # raises NotDirectedError
    cofinal = True
    for _ in range(budget):
        if order.upper_bound(family.order.sample(rng)) is None:
            cofinal = False
            break
    desc = None if family.descriptor is None else {**family.descriptor, "restricted": True}
    restricted = ProjectiveFamily(order, family.level, family.project_fn,
                                  jacobian_fn=family.jacobian_fn, name=f"{family.name}|J0",
                                  descriptor=desc, tol=family.tol, analytic=family.analytic)
    restricted.parent = family
    restricted.cofinal = cofinal
    return restricted


def restrict_thread(thread: Thread, restricted: ProjectiveFamily) -> Thread:
    return Thread(restricted, thread.resolver)


def extend_thread(thread: Thread, parent: ProjectiveFamily | None = None) -> Thread:
    """Rebuild the full thread from its values on a cofinal subset."""
    order = thread.family.order
    if not isinstance(order, RestrictedOrder):
        return thread
    parent = parent or thread.family.parent

    def resolve(i):
        j = order.upper_bound(i)
        if j is None:
            raise NotDirectedError(f"no cofinal level above {i!r}")
        return parent.project(i, j, thread(j))

    return Thread(parent, resolve)
