"""A small expression grammar for level functions and connection forms.

Expressions are sums and products of ``sin``, ``cos``, ``exp`` and
polynomials in the level coordinates ``x1 .. xn`` (``x``, ``y``, ``z`` alias
the first three).  Parsing goes through :mod:`ast` with a node whitelist, never
``eval``; differentiation is symbolic.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "sqrt": sp.sqrt}
_CONSTS = {"pi": sp.pi, "e": sp.E}
_BINOPS = {ast.Add: sp.Add, ast.Sub: lambda a, b: a - b, ast.Mult: sp.Mul,
           ast.Div: lambda a, b: a / b, ast.Pow: sp.Pow}


class ExpressionError(ValueError):
    pass


def symbols(n: int) -> list[sp.Symbol]:
    return list(sp.symbols(f"x1:{n + 1}", real=True)) if n else []


def parse_expression(text: str, nvars: int) -> sp.Expr:
    """Parse ``text`` into a sympy expression in ``x1 .. x{nvars}``."""
    syms = symbols(nvars)
    names = {str(s): s for s in syms}
    for alias, sym in zip("xyz", syms):
        names.setdefault(alias, sym)
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = walk(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](walk(node.args[0]))
        raise ExpressionError(f"unsupported syntax in {text!r}: {ast.dump(node)[:40]}")

    return walk(tree)


@dataclass(frozen=True)
class CompiledScalar:
    """Value, gradient and Hessian of a scalar expression as numpy callables."""

    expr: sp.Expr
    value: Callable
    grad: Callable
    hess: Callable


def compile_scalar(expr: sp.Expr, nvars: int) -> CompiledScalar:
    syms = symbols(nvars)
    grad = [sp.diff(expr, s) for s in syms]
    hess = [[sp.diff(g, s) for s in syms] for g in grad]
    f0 = sp.lambdify([syms], expr, "numpy")
    g0 = sp.lambdify([syms], grad, "numpy")
    h0 = sp.lambdify([syms], hess, "numpy")
    return CompiledScalar(expr,
                          lambda x: float(f0(np.asarray(x, dtype=float))),
                          lambda x: np.asarray(g0(np.asarray(x, dtype=float)), dtype=float),
                          lambda x: np.asarray(h0(np.asarray(x, dtype=float)),
                                               dtype=float).reshape(nvars, nvars))


@dataclass(frozen=True)
class CompiledVector:
    """A vector field (or 1-form) given componentwise, with its Jacobian."""

    exprs: tuple
    value: Callable
    jacobian: Callable


def compile_vector(exprs, nvars: int) -> CompiledVector:
    syms = symbols(nvars)
    jac = [[sp.diff(e, s) for s in syms] for e in exprs]
    v0 = sp.lambdify([syms], list(exprs), "numpy")
    j0 = sp.lambdify([syms], jac, "numpy")
    n = len(exprs)
    return CompiledVector(tuple(exprs),
                          lambda x: np.asarray(v0(np.asarray(x, dtype=float)), dtype=float).reshape(n),
                          lambda x: np.asarray(j0(np.asarray(x, dtype=float)),
                                               dtype=float).reshape(n, nvars))


def scalar_from_text(text: str, nvars: int) -> CompiledScalar:
    return compile_scalar(parse_expression(text, nvars), nvars)


def vector_from_text(texts, nvars: int) -> CompiledVector:
    return compile_vector([parse_expression(t, nvars) for t in texts], nvars)
