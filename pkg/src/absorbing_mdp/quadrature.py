"""Adaptive quadrature for evaluator-only integrands.

Bisects the worst interval first.  Each interval carries a Simpson rule and
its two-half refinement; the Richardson combination of the pair is the local
value and their scaled disagreement the local error estimate, so smooth
integrands converge at fifth order and an interval straddling a jump keeps
shrinking geometrically under worst-first bisection.

Caveat: the returned bound is an estimate, sharp for smooth integrands and
reliable for piecewise-smooth ones with finitely many jumps.  For
indicator-type integrands it assumes bounded variation; a pathological
evaluator can defeat it.
"""

from __future__ import annotations

import heapq
from typing import Callable


class QuadratureError(Exception):
    """Budget exhausted before the tolerance was met.

    Carries the best estimate so callers can still report something.
    """

    def __init__(self, value: float, err: float, tol: float):
        self.value = value
        self.err = err
        self.tol = tol
        super().__init__(f"quadrature stalled at err={err:.3e} > tol={tol:.3e}")


def _refine(f, a: float, b: float, fa: float, fm: float, fb: float):
    """Value and error for [a, b] from one Simpson bisection.

    Returns (value, err, flm, frm) with the half-midpoint samples so the
    caller can split without re-evaluating.
    """
    m = a + (b - a) / 2.0
    flm = f(a + (m - a) / 2.0)
    frm = f(m + (b - m) / 2.0)
    s1 = (fa + 4.0 * fm + fb) * (b - a) / 6.0
    s2 = (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb) * (b - a) / 12.0
    # /10 rather than the asymptotic /15 keeps a margin of safety
    return s2 + (s2 - s1) / 15.0, abs(s2 - s1) / 10.0, flm, frm


def adaptive_quadrature(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    max_intervals: int = 4096,
) -> tuple[float, float]:
    """Integrate f over [lo, hi]; returns (value, error bound)."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    fa, fm, fb = f(lo), f(lo + (hi - lo) / 2.0), f(hi)
    val, err, flm, frm = _refine(f, lo, hi, fa, fm, fb)
    # items: (-err, a, b, fa, flm, fm, frm, fb, value, err)
    heap = [(-err, lo, hi, fa, flm, fm, frm, fb, val, err)]
    count = 1
    total_err = err
    while total_err > tol:
        if count >= max_intervals:
            value = sum(item[8] for item in heap)
            raise QuadratureError(value, total_err, tol)
        _, a, b, fa, flm, fm, frm, fb, _, e = heapq.heappop(heap)
        total_err -= e
        m = a + (b - a) / 2.0
        for (x, y, fx, fmid, fy) in ((a, m, fa, flm, fm), (m, b, fm, frm, fb)):
            sv, se, sl, sr = _refine(f, x, y, fx, fmid, fy)
            heapq.heappush(heap, (-se, x, y, fx, sl, fmid, sr, fy, sv, se))
            total_err += se
        count += 1
    return sum(item[8] for item in heap), total_err
