"""Cylindrical smooth functions, differentials, derivations and vector fields.

A cylindrical function is the pullback of a smooth function on one level;
everything here is computed on a representative level and is independent
of the representative (promotion invariance).  Level functions take a
coordinate array; derivative oracles are analytic when supplied and
Richardson-refined central differences otherwise.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .expr import compile_scalar, compile_vector, parse_expression
from .family import ProjectiveFamily, Thread
from .spaces import coordinate_periods

FD_STEP = 1e-5


class NotADerivationError(ValueError):
    pass


def richardson_gradient(func: Callable, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central differences at steps h and h/2 combined to fourth order."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = 1.0
        d1 = (func(x + h * e) - func(x - h * e)) / (2 * h)
        d2 = (func(x + 0.5 * h * e) - func(x - 0.5 * h * e)) / h
        out[k] = (4 * d2 - d1) / 3
    return out


def richardson_jacobian(func: Callable, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = 1.0
        d1 = (np.asarray(func(x + h * e)) - np.asarray(func(x - h * e))) / (2 * h)
        d2 = (np.asarray(func(x + 0.5 * h * e)) - np.asarray(func(x - 0.5 * h * e))) / h
        cols.append((4 * d2 - d1) / 3)
    return np.array(cols, dtype=float).T.reshape(-1, x.size)


class CylFunction:
    """The function ``pi_j^* f_j`` for a level function ``f_j`` on ``family.level(j)``."""

    def __init__(self, family: ProjectiveFamily, level, func: Callable,
                 grad: Callable | None = None, hess: Callable | None = None, label: str = ""):
        if not family.level(level).continuous:
            raise ValueError("cylindrical calculus needs a continuous level")
        self.family = family
        self.level = level
        self.func = func
        self.grad = grad
        self.hess = hess
        self.label = label

    def __repr__(self):
        return f"CylFunction({self.label or '?'} @ {self.level!r})"

    @property
    def space(self):
        return self.family.level(self.level)

    def value(self, point) -> float:
        return float(self.func(self.space.coords(point)))

    def gradient(self, point) -> np.ndarray:
        x = self.space.coords(point)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return richardson_gradient(self.func, x)

    def hessian(self, point) -> np.ndarray:
        x = self.space.coords(point)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        if self.grad is not None:
            return richardson_jacobian(self.grad, x)
        return richardson_jacobian(lambda y: richardson_gradient(self.func, y, 1e-4), x, 1e-4)

    def __call__(self, x: Thread) -> float:
        return eval_cyl(self, x)

    def __add__(self, other):
        return ring_op("add", self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return ring_op("scale", other, self)
        return ring_op("mul", self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return ring_op("scale", -1.0, self)

    def __sub__(self, other):
        return self + (-other)


def cyl_from_expression(family: ProjectiveFamily, level, text: str) -> CylFunction:
    """Parse ``text`` in level coordinates ``x1 .. xn`` with symbolic derivatives."""
    n = family.level(level).dimension
    c = compile_scalar(parse_expression(text, n), n)
    return CylFunction(family, level, c.value, c.grad, c.hess, label=text)


def constant(family: ProjectiveFamily, level, c: float) -> CylFunction:
    n = family.level(level).dimension
    return CylFunction(family, level, lambda x: float(c), lambda x: np.zeros(n),
                       lambda x: np.zeros((n, n)), label=repr(c))


def eval_cyl(f: CylFunction, x: Thread, via=None) -> float:
    """``f_j(x_j)``; with ``via=k`` the value is read through level ``k >= j``."""
    if via is None:
        return f.value(x(f.level))
    return f.value(f.family.project(f.level, via, x(via)))


def promote(f: CylFunction, k) -> CylFunction:
    """Represent ``f`` on level ``k >= j`` as ``f_j o pi_jk`` (chain rule for oracles)."""
    fam, j = f.family, f.level
    if not fam.order.leq(j, k):
        raise ValueError(f"cannot promote from {j!r} to incomparable level {k!r}")
    if k == j:
        return f
    src, dst = fam.level(k), fam.level(j)

    def down(y):
        return dst.coords(fam.project(j, k, src.from_coords(y)))

    def func(y):
        return f.func(down(y))

    grad = hess = None
    if f.grad is not None:
        def grad(y):
            jac = fam.jacobian(j, k, src.from_coords(y))
            return jac.T @ np.asarray(f.grad(down(y)))
    if f.hess is not None and fam.analytic:
        # built-in projections are affine in level charts, so no second-order term
        def hess(y):
            jac = fam.jacobian(j, k, src.from_coords(y))
            return jac.T @ np.asarray(f.hess(down(y))) @ jac
    return CylFunction(fam, k, func, grad, hess, label=f.label)


def ring_op(op: str, f, g) -> CylFunction:
    """``add``/``mul`` of two functions at the join of their levels, or ``scale``."""
    if op == "scale":
        a, h = float(f), g
        return CylFunction(h.family, h.level, lambda x: a * h.func(x),
                           None if h.grad is None else (lambda x: a * np.asarray(h.grad(x))),
                           None if h.hess is None else (lambda x: a * np.asarray(h.hess(x))),
                           label=f"{a}*({h.label})")
    if f.family is not g.family:
        raise ValueError("functions live on different families")
    k = f.family.order.join(f.level, g.level)
    f, g = promote(f, k), promote(g, k)
    if op == "add":
        func = lambda x: f.func(x) + g.func(x)  # noqa: E731
        grad = (lambda x: f.grad(x) + g.grad(x)) if f.grad and g.grad else None
        hess = (lambda x: f.hess(x) + g.hess(x)) if f.hess and g.hess else None
        label = f"({f.label})+({g.label})"
    elif op == "mul":
        func = lambda x: f.func(x) * g.func(x)  # noqa: E731
        grad = hess = None
        if f.grad and g.grad:
            def grad(x):
                return f.func(x) * np.asarray(g.grad(x)) + g.func(x) * np.asarray(f.grad(x))
        if f.grad and g.grad and f.hess and g.hess:
            def hess(x):
                gf, gg = np.asarray(f.grad(x)), np.asarray(g.grad(x))
                return (f.func(x) * np.asarray(g.hess(x)) + g.func(x) * np.asarray(f.hess(x))
                        + np.outer(gf, gg) + np.outer(gg, gf))
        label = f"({f.label})*({g.label})"
    else:
        raise ValueError(f"unknown ring operation {op!r}")
    return CylFunction(f.family, k, func, grad, hess, label=label)


# --------------------------------------------------------------------------
# tangent threads and differentials


class TangentThread:
    """A tangent vector ``{v_j}`` based at the thread ``base``."""

    def __init__(self, base: Thread, vectors: Callable):
        self.base = base
        self.vectors = vectors

    def __call__(self, j) -> np.ndarray:
        return np.asarray(self.vectors(j), dtype=float)

    def scaled_sum(self, a: float, other: "TangentThread", b: float) -> "TangentThread":
        return TangentThread(self.base, lambda j: a * self(j) + b * other(j))


def check_tangent_thread(v: TangentThread, indices: Iterable, tol: float = 1e-10) -> float:
    """Largest ``|dpi_ij v_j - v_i|`` over comparable pairs; raises above ``tol``."""
    fam = v.base.family
    idx = list(indices)
    worst = 0.0
    for j in idx:
        for i in idx:
            if i != j and fam.order.leq(i, j):
                dev = float(np.max(np.abs(fam.pushforward(i, j, v.base(j), v(j)) - v(i)),
                                   initial=0.0))
                if dev > tol:
                    raise ValueError(f"tangent thread incoherent at {(i, j)}: {dev:.3g}")
                worst = max(worst, dev)
    return worst


def lift_tangent(base: Thread, level, vector) -> TangentThread:
    """Tangent thread with ``v_level = vector`` on a tower of local diffeomorphisms.

    Levels below ``level`` get the pushforward; levels above solve the
    (square, invertible) tangent map.
    """
    fam = base.family
    vector = np.asarray(vector, dtype=float)

    def vec(j):
        if fam.order.leq(j, level):
            return fam.pushforward(j, level, base(level), vector)
        return np.linalg.solve(fam.jacobian(level, j, base(j)), vector)

    return TangentThread(base, vec)


def differential(f: CylFunction, v: TangentThread) -> float:
    """``df(v_x) = d_{x_j} f_j (v_j)``."""
    j = f.level
    return float(f.gradient(v.base(j)) @ v(j))


# --------------------------------------------------------------------------
# vector fields


class VectorFieldFamily:
    """Coherent level vector fields ``X_j`` on a cofinal set of levels.

    ``component(j, coords)`` returns ``X_j`` in level coordinates.  ``cover(j)``
    returns a level ``>= j`` where the field is defined (default: ``j``).
    """

    def __init__(self, family: ProjectiveFamily, component: Callable,
                 jacobian: Callable | None = None, cover: Callable | None = None,
                 defined: Callable | None = None, label: str = ""):
        self.family = family
        self.component = component
        self.jacobian = jacobian
        self.cover = cover or (lambda j: j)
        self.defined = defined or (lambda j: True)
        self.label = label

    def at(self, j, point) -> np.ndarray:
        if not self.defined(j):
            raise ValueError(f"field {self.label!r} not defined at level {j!r}")
        return np.asarray(self.component(j, self.family.level(j).coords(point)), dtype=float)

    def jac(self, j, coords) -> np.ndarray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(j, coords), dtype=float)
        return richardson_jacobian(lambda y: self.component(j, y), coords)


def zero_field(family: ProjectiveFamily) -> VectorFieldFamily:
    def comp(j, x):
        return np.zeros(family.level(j).dimension)
    return VectorFieldFamily(family, comp, lambda j, x: np.zeros((len(x), len(x))), label="0")


def product_field(family: ProjectiveFamily, base_level, exprs: list[str]) -> VectorFieldFamily:
    """Field on a product family given at ``base_level`` and extended by zero.

    Components are expressions in the base-level coordinates; the field is
    defined on the cofinal set of levels containing ``base_level``.
    """
    base = frozenset(base_level)
    nb = family.level(base).dimension
    vec = compile_vector([parse_expression(e, nb) for e in exprs], nb)

    def slots(j):
        # coordinate offsets of each base factor inside level j
        out, k = [], 0
        for t in sorted(j):
            d = family.level(frozenset([t])).dimension
            if t in base:
                out.extend(range(k, k + d))
            k += d
        return np.array(out, dtype=int)

    def comp(j, x):
        s = slots(j)
        out = np.zeros(len(x))
        out[s] = vec.value(np.asarray(x)[s])
        return out

    def jac(j, x):
        s = slots(j)
        out = np.zeros((len(x), len(x)))
        out[np.ix_(s, s)] = vec.jacobian(np.asarray(x)[s])
        return out

    return VectorFieldFamily(family, comp, jac, cover=lambda j: frozenset(j) | base,
                             defined=lambda j: base <= frozenset(j), label=str(exprs))


def lift_field(family: ProjectiveFamily, base_level, component: Callable,
               jacobian: Callable | None = None) -> VectorFieldFamily:
    """Lift a field on ``base_level`` through a tower of local diffeomorphisms.

    ``X_m(x) = (dpi)^{-1} X_base(pi(x))`` for ``m >= base_level``.
    """
    def comp(m, x):
        point = family.level(m).from_coords(x)
        low = family.project(base_level, m, point)
        v = component(family.level(base_level).coords(low))
        return np.linalg.solve(family.jacobian(base_level, m, point), v)

    return VectorFieldFamily(family, comp, None, cover=lambda j: family.order.join(j, base_level),
                             defined=lambda j: family.order.leq(base_level, j), label="lifted")


def check_field_coherence(X: VectorFieldFamily, pairs: Iterable, samples: int = 20,
                          seed: int = 0) -> float:
    """Largest ``|(pi_ij)_* X_j - X_i|`` at sampled points over the given pairs."""
    fam = X.family
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i, j in pairs:
        for _ in range(samples):
            x = fam.sample_point(j, rng)
            push = fam.pushforward(i, j, x, X.at(j, x))
            worst = max(worst, float(np.max(np.abs(push - X.at(i, fam.project(i, j, x))),
                                            initial=0.0)))
    return worst


def lie_derivative(X: VectorFieldFamily, f: CylFunction) -> CylFunction:
    """``L_X f``: the level function ``x -> d f_k (X_k(x))`` at ``k = cover(level)``."""
    k = X.cover(f.level)
    if not X.defined(k):
        raise ValueError(f"field missing at every level above {f.level!r}")
    fk = promote(f, k)

    def comp(x):
        return X.component(k, x)

    def func(x):
        g = fk.grad(x) if fk.grad else richardson_gradient(fk.func, x)
        return float(np.asarray(g) @ comp(x))

    grad = None
    if fk.grad is not None and fk.hess is not None and X.jacobian is not None:
        def grad(x):
            return np.asarray(fk.hess(x)) @ comp(x) + X.jac(k, x).T @ np.asarray(fk.grad(x))
    return CylFunction(X.family, k, func, grad, None, label=f"L_{X.label}({f.label})")


def lie_bracket(X: VectorFieldFamily, Y: VectorFieldFamily) -> VectorFieldFamily:
    """Levelwise bracket ``[X_j, Y_j] = DY X - DX Y``."""
    if X.family is not Y.family:
        raise ValueError("fields on different families")

    def cover(j):
        k = X.cover(Y.cover(j))
        if not (X.defined(k) and Y.defined(k)):
            raise ValueError("incompatible cofinal sets")
        return k

    def comp(j, x):
        x = np.asarray(x, dtype=float)
        return Y.jac(j, x) @ X.component(j, x) - X.jac(j, x) @ Y.component(j, x)

    return VectorFieldFamily(X.family, comp, None, cover=cover,
                             defined=lambda j: X.defined(j) and Y.defined(j),
                             label=f"[{X.label},{Y.label}]")


def add_fields(X: VectorFieldFamily, Y: VectorFieldFamily, a: float = 1.0,
               b: float = 1.0) -> VectorFieldFamily:
    def comp(j, x):
        return a * X.component(j, x) + b * Y.component(j, x)
    return VectorFieldFamily(X.family, comp, None, cover=lambda j: X.cover(Y.cover(j)),
                             defined=lambda j: X.defined(j) and Y.defined(j))


# --------------------------------------------------------------------------
# derivations <-> fields


def derivation_from_fields(X: VectorFieldFamily) -> Callable[[CylFunction], CylFunction]:
    return lambda f: lie_derivative(X, f)


def random_level_function(family: ProjectiveFamily, level, rng: np.random.Generator,
                          terms: int = 3) -> CylFunction:
    """Random trigonometric polynomial (periodic coordinates) times polynomial (lines).

    Each term is ``a cos(omega . x + phase) prod_line (1 + b_k x_k)``; value,
    gradient and Hessian are closed-form.
    """
    periods = coordinate_periods(family.level(level))
    n = len(periods)
    line = np.array([t is None for t in periods])
    c0 = float(rng.normal())
    waves = []
    for _ in range(terms):
        omega = np.array([0.0 if t is None else int(rng.integers(-2, 3)) * 2 * math.pi / float(t)
                          for t in periods])
        b = np.where(line, rng.uniform(-0.5, 0.5, n), 0.0)
        waves.append((float(rng.normal()), omega, float(rng.uniform(0, 2 * math.pi)), b))

    def parts(x, b):
        fac = np.where(line, 1.0 + b * x, 1.0)
        P = float(np.prod(fac))
        dP = np.array([b[k] * np.prod(np.delete(fac, k)) if line[k] else 0.0 for k in range(n)])
        HP = np.zeros((n, n))
        for k in range(n):
            for m in range(n):
                if k != m and line[k] and line[m]:
                    HP[k, m] = b[k] * b[m] * np.prod(np.delete(fac, [k, m]))
        return P, dP, HP

    def func(x):
        x = np.asarray(x, dtype=float)
        return c0 + sum(a * math.cos(om @ x + ph) * parts(x, b)[0] for a, om, ph, b in waves)

    def grad(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(n)
        for a, om, ph, b in waves:
            P, dP, _ = parts(x, b)
            th = om @ x + ph
            out += a * (-math.sin(th) * P * om + math.cos(th) * dP)
        return out

    def hess(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros((n, n))
        for a, om, ph, b in waves:
            P, dP, HP = parts(x, b)
            th = om @ x + ph
            out += a * (-math.cos(th) * P * np.outer(om, om)
                        - math.sin(th) * (np.outer(om, dP) + np.outer(dP, om))
                        + math.cos(th) * HP)
        return out

    return CylFunction(family, level, func, grad, hess, label="random")


def audit_derivation(D: Callable, family: ProjectiveFamily, level, pairs: int = 64,
                     seed: int = 0, points: int = 3, tol: float = 1e-9) -> float:
    """Check linearity and Leibniz of ``D`` on random function pairs at ``level``.

    Returns the worst residual; raises :class:`NotADerivationError` above ``tol``
    (residuals are scaled by ``1 + |terms|``).
    """
    rng = np.random.default_rng(seed)
    space = family.level(level)
    worst = 0.0
    for _ in range(pairs):
        f = random_level_function(family, level, rng)
        g = random_level_function(family, level, rng)
        a, b = rng.normal(size=2)
        Df, Dg = D(f), D(g)
        D_lin, D_prod = D(a * f + b * g), D(f * g)
        for out in (Df, Dg, D_lin, D_prod):
            if out.level != level:
                raise NotADerivationError(f"D does not preserve the grade {level!r}")
        for _ in range(points):
            x = space.sample(rng)
            df, dg = Df.value(x), Dg.value(x)
            fv, gv = f.value(x), g.value(x)
            lin = abs(D_lin.value(x) - (a * df + b * dg)) / (1 + abs(a * df) + abs(b * dg))
            leib = abs(D_prod.value(x) - (fv * dg + gv * df)) / (1 + abs(fv * dg) + abs(gv * df))
            worst = max(worst, lin, leib)
    if worst > tol:
        raise NotADerivationError(f"linearity/Leibniz residual {worst:.3g} exceeds {tol}")
    return worst


def coordinate_functions(family: ProjectiveFamily, level) -> list:
    """Per coordinate: ``("line", x_k)`` or ``("circle", period, cos, sin)`` functions."""
    space = family.level(level)
    periods = coordinate_periods(space)
    out = []
    for k, t in enumerate(periods):
        e = np.zeros(len(periods))
        e[k] = 1.0
        if t is None:
            out.append(("line", CylFunction(family, level, lambda x, k=k: float(x[k]),
                                            lambda x, e=e: e, lambda x, n=len(e): np.zeros((n, n)))))
            continue
        w = 2 * math.pi / float(t)

        def c(x, k=k, w=w):
            return math.cos(w * x[k])

        def s(x, k=k, w=w):
            return math.sin(w * x[k])

        def cg(x, k=k, w=w, e=e):
            return -w * math.sin(w * x[k]) * e

        def sg(x, k=k, w=w, e=e):
            return w * math.cos(w * x[k]) * e

        def ch(x, k=k, w=w, e=e):
            return -w * w * math.cos(w * x[k]) * np.outer(e, e)

        def sh(x, k=k, w=w, e=e):
            return -w * w * math.sin(w * x[k]) * np.outer(e, e)

        out.append(("circle", float(t), CylFunction(family, level, c, cg, ch),
                    CylFunction(family, level, s, sg, sh)))
    return out


def fields_from_derivation(D: Callable, family: ProjectiveFamily, levels: Iterable,
                           audit: bool = True, seed: int = 0) -> VectorFieldFamily:
    """Recover ``X_j`` from a grade-preserving derivation via coordinate functions.

    On a circle coordinate ``X^k = (T / 2 pi) (cos D(sin) - sin D(cos))``.
    """
    levels = list(levels)
    if audit:
        for j in levels:
            audit_derivation(D, family, j, pairs=max(1, 64 // len(levels)), seed=seed)
    images = {}
    for j in levels:
        entries = []
        for item in coordinate_functions(family, j):
            if item[0] == "line":
                entries.append(("line", D(item[1])))
            else:
                _, t, c, s = item
                entries.append(("circle", t, c, s, D(c), D(s)))
        images[j] = entries

    def comp(j, x):
        if j not in images:
            raise ValueError(f"level {j!r} was not reconstructed")
        out = []
        for ent in images[j]:
            if ent[0] == "line":
                out.append(ent[1].func(x))
            else:
                _, t, c, s, Dc, Ds = ent
                out.append(t / (2 * math.pi) * (c.func(x) * Ds.func(x) - s.func(x) * Dc.func(x)))
        return np.array(out)

    return VectorFieldFamily(family, comp, None, defined=lambda j: j in images,
                             label="from-derivation")


# --------------------------------------------------------------------------
# locally cylindrical functions


class LocallyCylindrical:
    """A finite atlas of ``(box predicate on threads, CylFunction)`` charts."""

    def __init__(self, charts: list):
        self.charts = list(charts)

    def chart_for(self, x: Thread):
        for box, f in self.charts:
            if box(x):
                return f
        raise ValueError("point not covered by the atlas")

    def __call__(self, x: Thread) -> float:
        return self.chart_for(x)(x)

    def audit_overlaps(self, points: Iterable[Thread], tol: float = 1e-12) -> float:
        worst = 0.0
        for x in points:
            vals = [f(x) for box, f in self.charts if box(x)]
            if not vals:
                raise ValueError("point not covered by the atlas")
            worst = max(worst, max(vals) - min(vals))
        if worst > tol:
            raise ValueError(f"charts disagree on an overlap by {worst:.3g}")
        return worst
