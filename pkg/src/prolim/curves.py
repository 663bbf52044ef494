"""Smooth curves through fast-falling sequences, smoothness probes and the
Kriegl example of a locally cylindrical, non-cylindrical function.

Curves live in Euclidean spaces, circles and tori, where the normal chart
at the limit point is the identity (or the universal cover lift), so the
interpolation is linear in coordinates and exact at dyadic nodes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cylinder import CylFunction, TangentThread, richardson_jacobian
from .family import ProjectiveFamily, Thread, make_builtin_family
from .spaces import Circle, Euclidean, FiniteProduct, LevelSpace, Torus

PROBE_THRESHOLD = 1e-2
PROBE_STEP = 2.0 ** -7


class InsufficientData(ValueError):
    pass


# smooth step ------------------------------------------------------------------


def _psi(s: float) -> float:
    return math.exp(-1.0 / s) if s > 0 else 0.0


@dataclass(frozen=True)
class SmoothStep:
    """Flat transition ``phi(s) = psi(s) / (psi(s) + psi(1 - s))`` with ``psi = exp(-1/s)``."""

    def __call__(self, s: float) -> float:
        if s <= 0:
            return 0.0
        if s >= 1:
            return 1.0
        a, b = _psi(s), _psi(1.0 - s)
        return a / (a + b)

    def flatness_defect(self, order: int = 4, h: float = 1e-3) -> float:
        """Largest one-sided divided difference of orders 1..order at both ends."""
        worst = 0.0
        for k in range(1, order + 1):
            for end, sign in ((0.0, 1.0), (1.0, -1.0)):
                diff = sum((-1) ** (k - j) * math.comb(k, j) * self(end + sign * j * h)
                           for j in range(k + 1))
                worst = max(worst, abs(diff) / h ** k)
        return worst


STEP = SmoothStep()


# curves -----------------------------------------------------------------------


@dataclass
class SmoothCurve:
    """A curve ``s -> point`` with an optional analytic derivative."""

    evaluator: Callable[[float], object]
    space: LevelSpace | None = None
    domain: tuple = (-math.inf, math.inf)
    derivative: Callable[[float], np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, s: float):
        return self.evaluator(float(s))

    def coords(self, s: float) -> np.ndarray:
        pt = self(s)
        return self.space.coords(pt) if self.space is not None else np.atleast_1d(pt)

    def check_derivative(self, samples: Sequence[float], rtol: float = 1e-6) -> float:
        """Worst relative gap between the analytic and a numeric velocity."""
        if self.derivative is None:
            raise ValueError("curve has no analytic derivative")
        worst = 0.0
        for s in samples:
            ana = np.asarray(self.derivative(s), dtype=float).reshape(-1)
            num = richardson_jacobian(lambda t: self._lifted(float(t[0])), np.array([s]), 1e-4)
            num = num.reshape(-1)
            worst = max(worst, float(np.max(np.abs(ana - num)) / (1 + np.max(np.abs(ana)))))
        return worst

    def _lifted(self, s: float) -> np.ndarray:
        lift = self.meta.get("lift")
        return np.asarray(lift(s), dtype=float) if lift is not None else self.coords(s)

    def to_csv(self, samples: Sequence[float]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        rows = [(s, *self.coords(s)) for s in samples]
        w.writerow(["s", *[f"c{k}" for k in range(len(rows[0]) - 1)]] if rows else ["s"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()


def _chart_space(space: LevelSpace) -> LevelSpace:
    if not isinstance(space, (Euclidean, Circle, Torus)):
        raise ValueError(f"special curves need a Euclidean, circle or torus space, got {space.kind}")
    return space


def _dyadic_segment(s: float) -> int:
    """The n >= 0 with ``2^-(n+1) < s <= 2^-n`` for ``0 < s <= 1``."""
    m, e = math.frexp(s)
    return 1 - e if m == 0.5 else -e


def special_curve(points, limit, space: LevelSpace, rho: float = 1.0,
                  check_terms: int = 64) -> SmoothCurve:
    """Smooth curve with ``c(1/2^n) = x_n`` for ``n >= 1`` and ``c(0) = limit``.

    ``points`` is a list ``[x_1, x_2, ...]`` (extended by ``limit``) or a
    callable ``n -> x_n``.  Between consecutive nodes the curve follows the
    chart segment with a flat reparametrization, so it is constant near every
    node and all derivatives vanish at ``0`` once ``n^n d(x_n, x) <= rho``.
    """
    space = _chart_space(space)
    base = space.coords(limit)
    if callable(points):
        fetch, count = points, None
    else:
        pts = list(points)
        count = len(pts)

        def fetch(n):
            return pts[n - 1] if n <= count else limit

    def lift(n):
        return space.difference(fetch(n), limit)

    cache: dict[int, np.ndarray] = {}

    def v(n):
        if n not in cache:
            cache[n] = lift(n)
        return cache[n]

    for n in range(1, (count if count is not None else check_terms) + 1):
        d = space.distance(fetch(n), limit)
        if n ** n * d > rho * (1 + 1e-12):
            raise ValueError(f"growth condition n^n d(x_n, x) <= rho fails at n={n} "
                             f"({n ** n * d:.6g} > {rho:.6g})")

    def offset(s: float) -> np.ndarray:
        if s <= 0:
            return np.zeros_like(base)
        if s >= 0.5:
            return v(1)
        n = _dyadic_segment(s)
        if n > 1070:
            return np.zeros_like(base)
        sigma = 2.0 ** (n + 1) * s - 1.0
        if sigma == 1.0:
            return v(n)
        lo, hi = v(n + 1), v(n)
        return lo + STEP(sigma) * (hi - lo)

    def evaluate(s: float):
        return space.from_coords(base + offset(s))

    return SmoothCurve(evaluate, space, (-math.inf, math.inf),
                       meta={"lift": lambda s: base + offset(s), "rho": rho})


def product_metric(factors: Sequence[LevelSpace], x, y) -> float:
    """``sum_n 2^-n d_n/(1 + d_n)`` over the factors of a finite product."""
    prod = FiniteProduct(tuple(factors))
    return math.fsum(2.0 ** -(n + 1) * (d / (1 + d))
                     for n, d in enumerate(f.distance(a, b) for f, a, b in
                                           zip(prod.factors, prod.split(x), prod.split(y))))


def extract_fast_subsequence(points: Sequence, limit, factors: Sequence[LevelSpace],
                             rho: float = 1.0) -> list[int]:
    """Greedy indices ``k_1 < k_2 < ...`` (1-based) with ``r^r d(x_{k_r}, x) <= rho``."""
    ks: list[int] = []
    k = 0
    r = 1
    while k < len(points):
        for cand in range(k + 1, len(points) + 1):
            if r ** r * product_metric(factors, points[cand - 1], limit) <= rho:
                ks.append(cand)
                k = cand
                r += 1
                break
        else:
            break
    return ks


def curve_through_sequence(points: Sequence, limit, space: LevelSpace, rho: float = 1.0,
                           min_terms: int = 3) -> tuple[list[int], SmoothCurve]:
    """Extract a fast subsequence and interpolate it factorwise.

    Returns the 1-based indices ``k_r`` and a product curve with
    ``c(1/2^r) = x_{k_r}`` and ``c(0) = limit``.
    """
    factors = list(space.factors) if isinstance(space, FiniteProduct) else [space]
    prod = FiniteProduct(tuple(factors))
    flat = [p if isinstance(space, FiniteProduct) else (p,) for p in points]
    lim = limit if isinstance(space, FiniteProduct) else (limit,)
    ks = extract_fast_subsequence(flat, lim, factors, rho)
    if len(ks) < min_terms:
        raise InsufficientData(f"insufficient data: only {len(ks)} terms satisfy "
                               f"r^r d(x_k, x) <= {rho} in a prefix of {len(points)}")
    chosen = [prod.split(flat[k - 1]) for k in ks]
    lim_parts = prod.split(lim)
    curves = []
    for idx, f in enumerate(factors):
        seq = [c[idx] for c in chosen]
        bound = max(r ** r * f.distance(x, lim_parts[idx]) for r, x in enumerate(seq, 1))
        curves.append(special_curve(seq, lim_parts[idx], f, rho=max(bound, 1e-300)))

    def evaluate(s):
        return prod._flatten(c(s) for c in curves)

    def lift(s):
        return np.concatenate([c.meta["lift"](s) for c in curves])

    curve = SmoothCurve(evaluate, prod if isinstance(space, FiniteProduct) else space,
                        meta={"lift": lift, "indices": ks})
    if not isinstance(space, FiniteProduct):
        curve.evaluator = curves[0].evaluator
    return ks, curve


# smoothness probes --------------------------------------------------------------


@dataclass
class ProbeReport:
    order: int
    grid: dict
    ratios: list
    max_ratio: float
    passed: bool
    threshold: float = PROBE_THRESHOLD

    def to_json(self) -> dict:
        return {"order": self.order, "grid": self.grid, "ratios": self.ratios,
                "max_ratio": self.max_ratio, "pass": self.passed}


def _centered(values: np.ndarray, order: int, stride: int, centers: np.ndarray, H: float):
    """Centered order-``order`` differences of step ``stride`` fine cells at ``centers``."""
    out = np.zeros(centers.size)
    for j in range(order + 1):
        shift = (order - 2 * j) * stride // 2
        out += (-1) ** j * math.comb(order, j) * values[centers + shift]
    return out / H ** order


def smoothness_probe(g: Callable[[float], float], max_order: int = 4,
                     grid: tuple = (-1.0, 1.0, PROBE_STEP), threshold: float = PROBE_THRESHOLD,
                     atol: float = 1.0) -> ProbeReport:
    """Divided differences of ``g`` on a grid and on the halved grid.

    ``g`` is the real function ``f o c``.  For each order the stability
    ratio is ``max |D_h - D_{h/2}| / (max |D_{h/2}| + atol)`` over the
    coarse centers; the probe passes iff every ratio is at most
    ``threshold``.
    """
    if not 1 <= max_order <= 4:
        raise ValueError("probe order must be between 1 and 4")
    a, b, h = (float(v) for v in grid)
    if not (b > a and h > 0):
        raise ValueError("grid must be (start, stop, step) with stop > start and step > 0")
    fine = h / 4
    n_centers = int(round((b - a) / h)) + 1
    pad = 2 * max_order
    s_fine = a - pad * fine + fine * np.arange(4 * (n_centers - 1) + 2 * pad + 1)
    try:
        vals = np.array([float(g(s)) for s in s_fine])
    except Exception as exc:  # noqa: BLE001 - reported with context
        raise ValueError(f"evaluation failure on the probe grid: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ValueError("evaluation failure on the probe grid: non-finite value")
    centers = pad + 4 * np.arange(n_centers)
    ratios = []
    for o in range(1, max_order + 1):
        coarse = _centered(vals, o, 4, centers, h)
        halved = _centered(vals, o, 2, centers, h / 2)
        ratios.append(float(np.max(np.abs(coarse - halved)) / (np.max(np.abs(halved)) + atol)))
    worst = max(ratios)
    return ProbeReport(max_order, {"start": a, "stop": b, "step": h}, ratios, worst,
                       bool(worst <= threshold), threshold)


def dyadic_divided_differences(curve: SmoothCurve, order: int = 3, kmax: int = 20) -> list[float]:
    """Max order-``order`` divided difference on ``{0} u {2^-j : 0 <= j <= k}`` for each k.

    Entry ``k - order + 1`` is the value on the k-th grid; grids accumulate at 0.
    """
    out = []
    for k in range(order - 1, kmax + 1):
        nodes = [0.0] + [2.0 ** -j for j in range(k, -1, -1)]
        vals = [curve._lifted(s) for s in nodes]
        table = [np.asarray(v, dtype=float) for v in vals]
        for o in range(1, order + 1):
            table = [(table[i + 1] - table[i]) / (nodes[i + o] - nodes[i])
                     for i in range(len(table) - 1)]
        out.append(max(float(np.max(np.abs(t))) for t in table))
    return out


# the Boman harness -----------------------------------------------------------------


def random_trig_curve(n_factors: int, rng: np.random.Generator, degree: int = 3,
                      amplitude: float = 1.0) -> Callable[[float], np.ndarray]:
    """Per-factor trigonometric polynomials with coefficients bounded by amplitude/(1+m)."""
    a = rng.uniform(-amplitude, amplitude, (n_factors, degree + 1)) / (1 + np.arange(degree + 1))
    b = rng.uniform(-amplitude, amplitude, (n_factors, degree + 1)) / (1 + np.arange(degree + 1))
    m = np.arange(degree + 1)
    a[:, 0] += rng.uniform(0, 2 * math.pi, n_factors)

    def curve(s: float) -> np.ndarray:
        return a @ np.cos(m * s) + b @ np.sin(m * s)

    return curve


@dataclass
class HarnessReport:
    trials: int
    failures: int
    max_ratio: float
    order: int
    grid: dict
    seed: int
    failed_trials: list

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {"order": self.order, "grid": self.grid, "max_ratio": self.max_ratio,
                "pass": self.passed, "trials": self.trials, "failures": self.failures,
                "failed_trials": self.failed_trials, "seed": self.seed}


def boman_harness(family: ProjectiveFamily, f, trials: int = 50, seed: int = 0,
                  order: int = 4, grid: tuple = (-1.0, 1.0, PROBE_STEP)) -> HarnessReport:
    """Probe ``f`` along random structure curves of a finite product family.

    ``f`` is a :class:`CylFunction` or a plain callable on top-level
    coordinates (for planted counterexamples).  Curves are drawn in the top
    level and projected to the level of ``f``.
    """
    top = frozenset(family.order.labels)
    space = family.level(top)
    rng = np.random.default_rng(seed)
    if isinstance(f, CylFunction):
        def g_of(coords):
            return f.value(family.project(f.level, top, space.from_coords(coords)))
    else:
        def g_of(coords):
            return float(f(space.coords(space.from_coords(coords))))
    failures, worst, failed = 0, 0.0, []
    for t in range(trials):
        curve = random_trig_curve(space.dimension, rng)
        rep = smoothness_probe(lambda s: g_of(curve(s)), order, grid)
        worst = max(worst, rep.max_ratio)
        if not rep.passed:
            failures += 1
            failed.append(t)
    a, b, h = grid
    return HarnessReport(trials, failures, worst, order, {"start": a, "stop": b, "step": h},
                         seed, failed)


# geodesic differential --------------------------------------------------------------


def geodesic_differential(f: CylFunction, x, v, h: float = 1e-3) -> float:
    """``d/ds f(exp_x(s v))`` at ``s = 0`` along the straight (or wrapped) geodesic.

    ``x`` is a thread or a point of ``f``'s level, ``v`` a tangent thread or a
    coordinate vector at that level.
    """
    space = f.space
    base = x(f.level) if isinstance(x, Thread) else x
    vec = np.asarray(v(f.level) if isinstance(v, TangentThread) else v, dtype=float).reshape(-1)
    c0 = space.coords(base)

    def g(s):
        return f.value(space.from_coords(c0 + s * vec))

    d1 = (g(h) - g(-h)) / (2 * h)
    d2 = (g(h / 2) - g(-h / 2)) / h
    d3 = (g(h / 4) - g(-h / 4)) / (h / 2)
    r1 = (4 * d2 - d1) / 3
    r2 = (4 * d3 - d2) / 3
    return float((16 * r2 - r1) / 15)


# Kriegl's example ---------------------------------------------------------------------


def kriegl_bump(s: float) -> float:
    """``h(s) = exp(1 - 1/(1 - 4 s^2))`` on ``|s| < 1/2``, zero outside; ``h(0) = 1``."""
    q = 1.0 - 4.0 * s * s
    return math.exp(1.0 - 1.0 / q) if q > 0 else 0.0


def kriegl_eval(x: Sequence[float]) -> float:
    """``f(x) = sum_n h(x_0 - n) x_n`` for a finite-support sequence."""
    x = list(map(float, x))
    if not x:
        return 0.0
    x0 = x[0]
    total = 0.0
    for n in range(max(0, math.ceil(x0 - 0.5)), min(len(x) - 1, math.floor(x0 + 0.5)) + 1):
        total += kriegl_bump(x0 - n) * x[n]
    return total


def kriegl_family(n_coords: int) -> ProjectiveFamily:
    """Finite products of lines; label ``k`` carries sequence coordinate ``k - 1``."""
    return make_builtin_family({"kind": "ProductFamily",
                                "factors": [{"kind": "Euclidean", "dim": 1}] * n_coords})


def kriegl_atlas(n_coords: int):
    """Locally cylindrical atlas: on ``k - 1/4 < x_0 < k + 5/4`` only coordinates
    ``0, k, k + 1`` enter."""
    from .cylinder import LocallyCylindrical

    fam = kriegl_family(n_coords)
    charts = []
    for k in range(n_coords - 1):
        level = frozenset({1, k + 1, k + 2})
        slots = sorted(level)

        def func(c, k=k, slots=slots):
            vals = dict(zip(slots, c))
            return (kriegl_bump(vals[1] - k) * vals[k + 1]
                    + kriegl_bump(vals[1] - k - 1) * vals[k + 2])

        def box(th, k=k):
            x0 = th(frozenset({1}))
            x0 = x0[0] if isinstance(x0, tuple) else x0
            return k - 0.25 < x0 < k + 1.25

        charts.append((box, CylFunction(fam, level, func, label=f"kriegl[{k}]")))
    return fam, LocallyCylindrical(charts)


def kriegl_noncylindrical_witness(level: frozenset, n_coords: int):
    """Two sequences equal on the coordinates of ``level`` with different values."""
    free = next(n for n in range(1, n_coords) if n + 1 not in level)
    a = [0.0] * n_coords
    a[0] = float(free)
    b = list(a)
    b[free] = 1.0
    return a, b


def probe_report_json(report) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
