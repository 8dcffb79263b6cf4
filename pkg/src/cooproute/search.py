"""Small numeric search routines shared by the solvers.

All solvers in this package reduce one-dimensional subproblems to either a
sign change of a monotone function or the minimum of a convex function with
an available derivative, so plain bisection is enough everywhere and keeps
the package dependency-free.
"""

from __future__ import annotations

import math
from typing import Callable


def bisect_sign_change(f: Callable[[float], float], lo: float, hi: float,
                       iters: int = 60) -> float:
    """Point where a function decreasing from >=0 to <=0 crosses zero.

    Assumes ``f(lo) >= 0 >= f(hi)``; callers check the bracket.  Returns
    the midpoint of the final interval.
    """
    flo = f(lo)
    if flo <= 0.0:
        return lo
    fhi = f(hi)
    if fhi >= 0.0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm > 0.0:
            lo = mid
        elif fm < 0.0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def argmin_by_derivative(deriv: Callable[[float], float], lo: float,
                         hi: float, iters: int = 60) -> float:
    """Minimizer of a convex function on [lo, hi] given its derivative.

    The derivative of a convex function is nondecreasing, so the minimum
    sits at ``lo`` when the derivative starts nonnegative, at ``hi`` when
    it stays nonpositive, and at the derivative's zero otherwise.  An
    infinite derivative value is treated as its sign.
    """
    if hi <= lo:
        return lo
    dlo = deriv(lo)
    if dlo >= 0.0:
        return lo
    dhi = deriv(hi)
    if dhi <= 0.0:
        return hi
    a, b = lo, hi
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        dm = deriv(mid)
        if math.isnan(dm):
            # Capacity blowups show up as nan only through subtraction of
            # infinities; step back toward the feasible side.
            b = mid
            continue
        if dm > 0.0:
            b = mid
        elif dm < 0.0:
            a = mid
        else:
            return mid
    return 0.5 * (a + b)
