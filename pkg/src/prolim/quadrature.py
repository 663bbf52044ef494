"""Adaptive Simpson quadrature with an absolute error target."""
from __future__ import annotations

import math
from typing import Callable

DEFAULT_TOL = 1e-10
MAX_INTERVALS = 2 ** 20


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = DEFAULT_TOL,
                     max_intervals: int = MAX_INTERVALS) -> float:
    """``int_a^b f`` to absolute error about ``tol``.

    Each interval is accepted when the two-panel estimate differs from the
    one-panel estimate by at most ``15 * tol_local``; accepted values carry
    the Richardson correction.  Raises :class:`QuadratureError` when more
    than ``max_intervals`` intervals would be needed.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = []
    used = 1
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * frm + fhi)
        delta = left + right - est
        # stop on success, or when the interval can no longer be split in floating point
        if abs(delta) <= 15 * eps or depth >= 60 or not lo < lm < mid < rm < hi:
            total.append(left + right + delta / 15)
            continue
        used += 1
        if used > max_intervals:
            raise QuadratureError(f"quadrature did not converge within {max_intervals} intervals")
        stack.append((mid, hi, fmid, frm, fhi, right, eps / 2, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, eps / 2, depth + 1))
    return math.fsum(total)
