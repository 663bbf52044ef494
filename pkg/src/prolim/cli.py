"""Command-line front end.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
malformed input.  JSON reports carry ``version``, ``command`` and ``pass``;
CSV outputs start with a header row.  ``PROLIM_TOL`` overrides the default
check tolerance.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__


class InputError(ValueError):
    """Malformed command input (exit status 2)."""


def _env_tol(default: float) -> float:
    raw = os.environ.get("PROLIM_TOL")
    if raw is None or raw.strip() == "":
        return default
    try:
        tol = float(raw)
    except ValueError:
        raise InputError(f"PROLIM_TOL must be a decimal number, got {raw!r}") from None
    if not tol > 0 or not math.isfinite(tol):
        raise InputError("PROLIM_TOL must be positive and finite")
    return tol


def _load_json(text: str):
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            return json.load(fh)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"not a JSON file or literal: {text[:40]!r} ({exc.msg})") from None


def _fmt_real(v: float) -> str:
    v = round(float(v), 12) + 0.0
    return f"{v:.12g}"


def format_complex(z: complex) -> str:
    re, im = round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0
    sign = "-" if im < 0 else "+"
    return f"{_fmt_real(re)}{sign}{_fmt_real(abs(im))}i"


def _report(command: str, passed: bool, **body) -> dict:
    return {"version": __version__, "command": command, "pass": bool(passed), **body}


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=str)


# subcommands ------------------------------------------------------------------


def cmd_coherence_check(args) -> int:
    from .family import check_family_coherence, make_builtin_family

    if args.family.lstrip().startswith("{") or os.path.exists(args.family):
        desc = _load_json(args.family)
    else:
        desc = {"kind": args.family}
        if args.p is not None:
            desc["p"] = args.p
        if args.factors is not None:
            desc["factors"] = args.factors
        if args.m is not None:
            desc["m"], desc["n"] = args.m, args.n
    try:
        fam = make_builtin_family(desc)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from None
    tol = args.tol if args.tol is not None else _env_tol(1e-12)
    rep = check_family_coherence(fam, args.budget, args.seed, tol)
    body = rep.to_json()
    body.pop("pass")
    _emit(_dump(_report("coherence-check", rep.passed, family=fam.to_json(), report=body)), args.out)
    return 0 if rep.passed else 1


def cmd_padic_arith(args) -> int:
    from .padic import format_padic, parse_padic

    if args.p < 2:
        raise InputError("p must be at least 2")
    try:
        a = parse_padic(args.a, args.p)
        b = parse_padic(args.b, args.p) if args.b is not None else None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    op = args.op
    if op in ("add", "sub", "mul") and b is None:
        raise InputError(f"{op} needs two operands")
    if op == "add":
        res = a + b
    elif op == "sub":
        res = a - b
    elif op == "mul":
        res = a * b
    elif op == "neg":
        res = -a
    else:  # project
        if args.depth < 1:
            raise InputError("depth must be >= 1")
        _emit(str(a.project(args.depth)), args.out)
        return 0
    _emit(format_padic(res, args.depth), args.out)
    return 0


def _parse_t(text: str) -> Fraction:
    try:
        t = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"t must be a finite decimal or fraction, got {text!r}") from None
    return t


def cmd_char_eval(args) -> int:
    from .padic import parse_padic
    from .solenoid import character

    if args.p < 2 or args.n < 1:
        raise InputError("need p >= 2 and n >= 1")
    try:
        x = parse_padic(args.x, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(format_complex(character(args.p, _parse_t(args.t), x, args.n)), args.out)
    return 0


def cmd_solenoid_leaf(args) -> int:
    from .padic import parse_padic
    from .solenoid import chi_phase, leaf_curve

    if args.p < 2 or args.levels < 1 or args.samples < 2:
        raise InputError("need p >= 2, levels >= 1 and samples >= 2")
    try:
        x = parse_padic(args.x, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lo, hi = _parse_t(args.s_min), _parse_t(args.s_max)
    if not hi > lo:
        raise InputError("s-max must exceed s-min")
    eta = leaf_curve(x)
    lines = ["s,level,angle"]
    for k in range(args.samples):
        s = lo + (hi - lo) * Fraction(k, args.samples - 1)
        pt = eta(s)
        for n in range(1, args.levels + 1):
            angle = 2 * math.pi * float(chi_phase(pt, n))
            lines.append(f"{float(s)!r},{n},{angle!r}")
    _emit("\n".join(lines), args.out)
    return 0


def cmd_boman_probe(args) -> int:
    from .curves import boman_harness
    from .cylinder import cyl_from_expression
    from .family import torus_family

    if args.factors < 1 or args.trials < 1:
        raise InputError("factors and trials must be positive")
    try:
        level = frozenset(int(t) for t in args.level.split(","))
    except ValueError:
        raise InputError(f"level must be comma-separated factor labels, got {args.level!r}") from None
    if not level or not level <= set(range(1, args.factors + 1)):
        raise InputError("level labels must lie in 1..factors")
    fam = torus_family(args.factors)
    try:
        f = cyl_from_expression(fam, level, args.expr)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rep = boman_harness(fam, f, args.trials, args.seed, args.order)
    body = rep.to_json()
    passed = body.pop("pass")
    body["function"] = {"expr": args.expr, "level": sorted(level)}
    _emit(_dump(_report("boman-probe", passed, **body)), args.out)
    return 0 if passed else 1


def _graph_and_connection(args):
    from .gauge import GraphError, connection_from_json, graph_from_json

    try:
        graph = graph_from_json(_load_json(args.graph))
        conn = connection_from_json(_load_json(args.connection))
    except (GraphError, KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad graph or connection: {exc}") from None
    return graph, conn


def cmd_holonomy(args) -> int:
    from .gauge import holonomy_csv, project_connection

    graph, conn = _graph_and_connection(args)
    gc = project_connection(conn, graph, args.tol)
    if args.json:
        vals = {eid: [gc[eid].real, gc[eid].imag] for eid in graph.ids}
        _emit(_dump(_report("holonomy", True, holonomies=vals, tol=args.tol)), args.out)
    else:
        _emit(holonomy_csv(gc), args.out)
    return 0


def cmd_lambda_cert(args) -> int:
    from .gauge import Character, lambda_certificate

    graph, conn = _graph_and_connection(args)
    bound = _env_tol(1e-8)
    if args.character:
        chars = [Character.parse(args.character)]
    else:
        rng = np.random.default_rng(args.seed)
        chars = [Character({eid: int(rng.integers(-args.max_exp, args.max_exp + 1))
                            for eid in graph.ids}) for _ in range(args.random)]
    results = []
    for chi in chars:
        try:
            cert = lambda_certificate(conn, chi, graph, args.tol, bound)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        results.append({"character": chi.exponents, **cert})
    passed = all(r["pass"] for r in results)
    worst = max((r["gap"] for r in results), default=0.0)
    _emit(_dump(_report("lambda-cert", passed, bound=bound, max_gap=worst, results=results)),
          args.out)
    return 0 if passed else 1


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prolim", description="Projective-limit calculator.")
    parser.add_argument("--version", action="version", version=f"prolim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("coherence-check", help="audit projection coherence of a family"))
    p.add_argument("--family", required=True,
                   help="builtin kind, JSON literal or JSON file")
    p.add_argument("--p", type=int)
    p.add_argument("--factors", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_coherence_check)

    p = common(sub.add_parser("padic-arith", help="exact p-adic integer arithmetic"))
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("op", choices=["add", "sub", "mul", "neg", "project"])
    p.add_argument("a")
    p.add_argument("b", nargs="?")
    p.set_defaults(func=cmd_padic_arith)

    p = common(sub.add_parser("char-eval", help="evaluate a solenoid character"))
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_char_eval)

    p = common(sub.add_parser("solenoid-leaf", help="CSV samples of a leaf through (0, x)"))
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--x", default="0")
    p.add_argument("--s-min", default="0")
    p.add_argument("--s-max", default="1")
    p.add_argument("--samples", type=int, default=33)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=cmd_solenoid_leaf)

    p = common(sub.add_parser("boman-probe", help="smoothness probes along random curves"))
    p.add_argument("--factors", type=int, default=10)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--order", type=int, default=4, choices=[1, 2, 3, 4])
    p.add_argument("--level", default="1,2,3")
    p.add_argument("--expr", default="cos(x1)*sin(x2) + 0.5*cos(x1 + 2*x3)")
    p.set_defaults(func=cmd_boman_probe)

    for name, func, hlp in (("holonomy", cmd_holonomy, "edge holonomy table"),
                            ("lambda-cert", cmd_lambda_cert, "e^{i lambda} certificate")):
        p = common(sub.add_parser(name, help=hlp))
        p.add_argument("--graph", required=True, help="graph JSON file or literal")
        p.add_argument("--connection", required=True, help="connection JSON file or literal")
        p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
        if name == "holonomy":
            p.add_argument("--json", action="store_true", help="JSON instead of CSV")
        else:
            p.add_argument("--character", help='e.g. "2*e1 - e2"')
            p.add_argument("--random", type=int, default=50)
            p.add_argument("--max-exp", type=int, default=3)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"prolim {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
