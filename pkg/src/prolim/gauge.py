"""U(1) connections on graphs in R^d: holonomies, subdivision projections and
edge characters.

A smooth connection is a 1-form ``A`` on ``R^d``; its image in the
configuration space of a graph is the list of edge holonomies
``exp(i int_e A)``.  Graph refinement splits edges, and the coarse
projection multiplies child holonomies back together.
"""
from __future__ import annotations

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp

from .expr import compile_vector, parse_expression, symbols
from .quadrature import DEFAULT_TOL, QuadratureError, adaptive_simpson

__all__ = [
    "Edge", "Graph", "GraphError", "ConnectionU1", "GeneralizedConnection", "Character",
    "Refinement", "holonomy", "line_integral", "project_connection", "refine_graph",
    "evaluate_character", "lambda_of_smooth", "lambda_certificate", "graph_from_json",
    "connection_from_json", "holonomy_csv", "QuadratureError",
]


class GraphError(ValueError):
    pass


# edges ----------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    """A smooth path ``[0, 1] -> R^d``; ``breaks`` are interior kinks."""

    id: str
    path: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    breaks: tuple = ()
    forward: bool = True

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.path(0.0), dtype=float)

    @property
    def end(self) -> np.ndarray:
        return np.asarray(self.path(1.0), dtype=float)

    @property
    def dim(self) -> int:
        return self.start.size

    @classmethod
    def segment(cls, eid: str, a: Sequence[float], b: Sequence[float]) -> "Edge":
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if np.allclose(a, b):
            raise GraphError(f"edge {eid!r} has coincident endpoints")
        return cls(eid, lambda t: a + t * (b - a), lambda t: b - a)

    @classmethod
    def polyline(cls, eid: str, points: Sequence[Sequence[float]]) -> "Edge":
        pts = np.asarray(points, dtype=float)
        if len(pts) < 2:
            raise GraphError(f"polyline {eid!r} needs at least two points")
        m = len(pts) - 1

        def piece(t):
            return min(int(t * m), m - 1)

        def path(t):
            k = piece(t)
            return pts[k] + (t * m - k) * (pts[k + 1] - pts[k])

        def vel(t):
            k = piece(t)
            return m * (pts[k + 1] - pts[k])

        return cls(eid, path, vel, tuple(k / m for k in range(1, m)))

    @classmethod
    def trig(cls, eid: str, cos_coeffs: Sequence[Sequence[float]],
             sin_coeffs: Sequence[Sequence[float]]) -> "Edge":
        """``x_d(t) = a_d0 + sum_m (a_dm cos(pi m t) + b_dm sin(pi m t))``.

        ``sin_coeffs[d][m - 1]`` multiplies ``sin(pi m t)``.
        """
        A = [np.asarray(c, dtype=float) for c in cos_coeffs]
        B = [np.asarray(c, dtype=float) for c in sin_coeffs]
        if len(A) != len(B):
            raise GraphError("cosine and sine coefficient lists differ in dimension")

        def path(t):
            return np.array([a @ np.cos(math.pi * np.arange(a.size) * t)
                             + b @ np.sin(math.pi * np.arange(1, b.size + 1) * t)
                             for a, b in zip(A, B)])

        def vel(t):
            return np.array([-(a * math.pi * np.arange(a.size)) @ np.sin(math.pi * np.arange(a.size) * t)
                             + (b * math.pi * np.arange(1, b.size + 1))
                             @ np.cos(math.pi * np.arange(1, b.size + 1) * t)
                             for a, b in zip(A, B)])

        return cls(eid, path, vel)

    def reversed(self) -> "Edge":
        p, v = self.path, self.velocity
        eid = self.id[:-1] if self.id.endswith("~") else self.id + "~"
        return Edge(eid, lambda t: p(1.0 - t), lambda t: -np.asarray(v(1.0 - t)),
                    tuple(sorted(1.0 - b for b in self.breaks)), not self.forward)

    def restrict(self, s0: float, s1: float, eid: str | None = None) -> "Edge":
        """The sub-path over ``[s0, s1]`` reparametrized to ``[0, 1]``."""
        if not 0.0 <= s0 < s1 <= 1.0:
            raise GraphError("restriction needs 0 <= s0 < s1 <= 1")
        p, v, w = self.path, self.velocity, s1 - s0
        br = tuple((b - s0) / w for b in self.breaks if s0 < b < s1)
        return Edge(eid or f"{self.id}[{s0:g},{s1:g}]", lambda t: p(s0 + w * t),
                    lambda t: w * np.asarray(v(s0 + w * t)), br, self.forward)

    def concat(self, other: "Edge", eid: str | None = None) -> "Edge":
        """``self`` followed by ``other``, each at double speed."""
        if not np.allclose(self.end, other.start, atol=1e-12):
            raise GraphError(f"edges {self.id!r} and {other.id!r} do not meet")
        p1, v1, p2, v2 = self.path, self.velocity, other.path, other.velocity

        def path(t):
            return p1(2 * t) if t < 0.5 else p2(2 * t - 1)

        def vel(t):
            return 2 * np.asarray(v1(2 * t) if t < 0.5 else v2(2 * t - 1))

        br = tuple(b / 2 for b in self.breaks) + (0.5,) + tuple(0.5 + b / 2 for b in other.breaks)
        return Edge(eid or f"{self.id}*{other.id}", path, vel, br)

    def check(self, samples: int = 33) -> None:
        for t in np.linspace(0, 1, samples)[1:-1]:
            if np.linalg.norm(self.velocity(t)) == 0:
                raise GraphError(f"edge {self.id!r} has vanishing velocity at t={t:.3g}")
        if not (np.all(np.isfinite(self.start)) and np.all(np.isfinite(self.end))):
            raise GraphError(f"edge {self.id!r} has non-finite endpoints")


# graphs -----------------------------------------------------------------------


def _vertex_key(x: np.ndarray) -> tuple:
    return tuple(round(float(c), 9) + 0.0 for c in x)


@dataclass
class Graph:
    edges: list
    audit_samples: int = 65

    def __post_init__(self):
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate edge identifiers")
        for e in self.edges:
            e.check()

    @property
    def by_id(self) -> dict:
        return {e.id: e for e in self.edges}

    @property
    def ids(self) -> list:
        return [e.id for e in self.edges]

    @property
    def vertices(self) -> set:
        return {_vertex_key(x) for e in self.edges for x in (e.start, e.end)}

    def audit(self, margin: float = 0.05, tol: float = 1e-9) -> float:
        """Minimum distance between distinct edges away from shared endpoints.

        Raises :class:`GraphError` when two edges meet outside a vertex.
        """
        ts = np.linspace(0.0, 1.0, self.audit_samples)
        samples = {e.id: np.array([e.path(t) for t in ts]) for e in self.edges}
        worst = math.inf
        for a_i, a in enumerate(self.edges):
            for b in self.edges[a_i + 1:]:
                shared = {_vertex_key(x) for x in (a.start, a.end)} & \
                         {_vertex_key(x) for x in (b.start, b.end)}
                keep_a = np.ones(ts.size, bool)
                keep_b = np.ones(ts.size, bool)
                for key, keep, e in ((k, ka, ea) for k in shared
                                     for ka, ea in ((keep_a, a), (keep_b, b))):
                    if _vertex_key(e.start) == key:
                        keep &= ts > margin
                    if _vertex_key(e.end) == key:
                        keep &= ts < 1 - margin
                pa, pb = samples[a.id][keep_a], samples[b.id][keep_b]
                if pa.size and pb.size:
                    d = float(np.min(np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)))
                    if d <= tol:
                        raise GraphError(f"edges {a.id!r} and {b.id!r} meet away from a vertex")
                    worst = min(worst, d)
        return worst


# connections --------------------------------------------------------------------


@dataclass
class ConnectionU1:
    """A real 1-form ``A = sum A_k dx_k`` on ``R^d``."""

    dim: int
    components: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    @classmethod
    def from_expressions(cls, exprs: Sequence[str]) -> "ConnectionU1":
        d = len(exprs)
        vec = compile_vector([parse_expression(t, d) for t in exprs], d)
        return cls(d, vec.value, label=",".join(exprs))

    @classmethod
    def exact(cls, potential: str, dim: int) -> "ConnectionU1":
        """``A = d phi`` for a scalar potential ``phi``."""
        phi = parse_expression(potential, dim)
        grads = [sp.diff(phi, s) for s in symbols(dim)]
        vec = compile_vector(grads, dim)
        return cls(dim, vec.value, label=f"d({potential})")

    @classmethod
    def constant(cls, coeffs: Sequence[float]) -> "ConnectionU1":
        c = np.asarray(coeffs, dtype=float)
        return cls(c.size, lambda x: c, label=str(list(c)))

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.components(np.asarray(x, dtype=float)), dtype=float)


def line_integral(A: ConnectionU1, e: Edge, tol: float = DEFAULT_TOL) -> float:
    """``int_e A = int_0^1 A(e(t)) . e'(t) dt``, split at the edge's kinks."""
    if e.dim != A.dim:
        raise ValueError(f"edge {e.id!r} lives in R^{e.dim}, connection in R^{A.dim}")
    knots = (0.0, *e.breaks, 1.0)
    pieces = len(knots) - 1

    def integrand(t):
        return float(A(e.path(t)) @ np.asarray(e.velocity(t), dtype=float))

    return math.fsum(adaptive_simpson(integrand, lo, hi, tol / pieces)
                     for lo, hi in zip(knots[:-1], knots[1:]))


def holonomy(A: ConnectionU1, e: Edge, tol: float = DEFAULT_TOL) -> complex:
    return cmath.exp(1j * line_integral(A, e, tol))


@dataclass
class GeneralizedConnection:
    """A unit complex number on each edge of a graph."""

    graph: Graph
    values: dict

    def __post_init__(self):
        missing = set(self.graph.ids) - set(self.values)
        if missing:
            raise GraphError(f"no value on edges {sorted(missing)}")

    def __getitem__(self, eid):
        return self.values[eid]

    def to_csv(self) -> str:
        return holonomy_csv(self)


def project_connection(A: ConnectionU1, graph: Graph, tol: float = DEFAULT_TOL) -> GeneralizedConnection:
    return GeneralizedConnection(graph, {e.id: holonomy(A, e, tol) for e in graph.edges})


# refinement -----------------------------------------------------------------------


@dataclass
class Refinement:
    """``coarse <= fine`` with each coarse edge a signed word in fine edges."""

    coarse: Graph
    fine: Graph
    composition: dict = field(default_factory=dict)

    def __call__(self, gc: GeneralizedConnection) -> GeneralizedConnection:
        return self.coarse_projection(gc)

    def coarse_projection(self, gc: GeneralizedConnection) -> GeneralizedConnection:
        out = {}
        for eid, word in self.composition.items():
            z = complex(1.0)
            for child, sign in word:
                z *= gc[child] ** sign
            out[eid] = z
        return GeneralizedConnection(self.coarse, out)

    def compose(self, finer: "Refinement") -> "Refinement":
        """``self`` after ``finer``: coarse edges written in the finest edges."""
        comp = {}
        for eid, word in self.composition.items():
            comp[eid] = [(g, s * t) for child, s in word for g, t in finer.composition[child]]
        return Refinement(self.coarse, finer.fine, comp)


def identity_refinement(graph: Graph) -> Refinement:
    return Refinement(graph, graph, {e.id: [(e.id, 1)] for e in graph.edges})


def refine_graph(graph: Graph, eid: str, s: float) -> Refinement:
    """Split edge ``eid`` at parameter ``s`` into ``eid.0`` and ``eid.1``."""
    if not 0.0 < s < 1.0:
        raise GraphError("split parameter must lie strictly between 0 and 1")
    target = graph.by_id.get(eid)
    if target is None:
        raise GraphError(f"no edge {eid!r} in graph")
    new_edges, comp = [], {}
    for e in graph.edges:
        if e.id == eid:
            left, right = e.restrict(0.0, s, f"{eid}.0"), e.restrict(s, 1.0, f"{eid}.1")
            new_edges += [left, right]
            comp[eid] = [(left.id, 1), (right.id, 1)]
        else:
            new_edges.append(e)
            comp[e.id] = [(e.id, 1)]
    return Refinement(graph, Graph(new_edges, graph.audit_samples), comp)


# characters -------------------------------------------------------------------------


class Character:
    """An element of the free abelian group on edge identifiers."""

    __slots__ = ("exponents",)

    def __init__(self, exponents: Mapping[str, int] | None = None):
        self.exponents = {k: int(v) for k, v in sorted((exponents or {}).items()) if int(v) != 0}

    def __add__(self, other: "Character") -> "Character":
        out = dict(self.exponents)
        for k, v in other.exponents.items():
            out[k] = out.get(k, 0) + v
        return Character(out)

    def __neg__(self) -> "Character":
        return Character({k: -v for k, v in self.exponents.items()})

    def __sub__(self, other: "Character") -> "Character":
        return self + (-other)

    def __rmul__(self, n: int) -> "Character":
        return Character({k: n * v for k, v in self.exponents.items()})

    def __eq__(self, other):
        return isinstance(other, Character) and self.exponents == other.exponents

    def __hash__(self):
        return hash(tuple(self.exponents.items()))

    def __repr__(self):
        return f"Character({self.exponents})"

    @classmethod
    def parse(cls, text: str) -> "Character":
        """``"2*e1 - e2"`` style integer combinations of edge ids."""
        out: dict = {}
        for tok in text.replace("-", "+-").split("+"):
            tok = tok.strip()
            if not tok:
                continue
            neg = tok.startswith("-")
            tok = tok.lstrip("-").strip()
            if "*" in tok:
                n, eid = (t.strip() for t in tok.split("*", 1))
                n = int(n)
            else:
                n, eid = 1, tok
            out[eid] = out.get(eid, 0) + (-n if neg else n)
        return cls(out)


def evaluate_character(chi: Character, gc: GeneralizedConnection) -> complex:
    """``prod_k value_k^{n_k}``."""
    z = complex(1.0)
    for eid, n in chi.exponents.items():
        if eid not in gc.values:
            raise GraphError(f"character uses edge {eid!r} missing from the graph")
        z *= gc.values[eid] ** n
    return z


def lambda_of_smooth(A: ConnectionU1, chi: Character, graph: Graph,
                     tol: float = DEFAULT_TOL) -> float:
    """``lambda(chi) = sum_k n_k int_{e_k} A``."""
    edges = graph.by_id
    for eid in chi.exponents:
        if eid not in edges:
            raise GraphError(f"character uses edge {eid!r} missing from the graph")
    return math.fsum(n * line_integral(A, edges[eid], tol) for eid, n in chi.exponents.items())


def lambda_certificate(A: ConnectionU1, chi: Character, graph: Graph, tol: float = DEFAULT_TOL,
                       bound: float = 1e-8) -> dict:
    """Check ``<A, chi> = exp(i lambda(chi))`` for a smooth connection."""
    lam = lambda_of_smooth(A, chi, graph, tol)
    val = evaluate_character(chi, project_connection(A, graph, tol))
    gap = abs(val - cmath.exp(1j * lam))
    return {"lambda": lam, "value": [val.real, val.imag], "gap": gap, "pass": gap <= bound}


# serialization ------------------------------------------------------------------------


def edge_from_json(obj: dict) -> Edge:
    eid = str(obj["id"])
    if "segment" in obj:
        a, b = obj["segment"]
        return Edge.segment(eid, a, b)
    if "polyline" in obj:
        return Edge.polyline(eid, obj["polyline"])
    if "trig" in obj:
        t = obj["trig"]
        return Edge.trig(eid, t["cos"], t.get("sin", [[] for _ in t["cos"]]))
    raise GraphError(f"edge {eid!r} needs one of segment, polyline, trig")


def graph_from_json(obj: dict | str) -> Graph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    graph = Graph([edge_from_json(e) for e in obj["edges"]])
    if obj.get("audit", True):
        graph.audit()
    return graph


def connection_from_json(obj: dict | str) -> ConnectionU1:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "potential" in obj:
        return ConnectionU1.exact(obj["potential"], int(obj["dim"]))
    form = [str(c) for c in obj["form"]]
    if "dim" in obj and int(obj["dim"]) != len(form):
        raise ValueError("form length does not match dim")
    return ConnectionU1.from_expressions(form)


def holonomy_csv(gc: GeneralizedConnection) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "re", "im"])
    for eid in gc.graph.ids:
        z = gc[eid]
        w.writerow([eid, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()
