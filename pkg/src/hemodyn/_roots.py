"""Bracketed scalar root finding: bisection followed by a Newton polish."""
from __future__ import annotations

import math


def bisect(f, lo, hi, xtol=1e-13, maxiter=200):
    """Root of ``f`` on ``[lo, hi]``, assuming ``f(lo)`` and ``f(hi)`` differ in sign.

    Stops once the bracket is narrower than ``xtol`` or the midpoint stops
    moving in floating point.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"root not bracketed on [{lo}, {hi}]: f = {flo}, {fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid == lo or mid == hi:
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def polish(f, df, x, lo, hi, steps=5):
    """Up to ``steps`` Newton iterations, rejecting any that leave ``[lo, hi]``
    or increase ``|f|``."""
    fx = f(x)
    for _ in range(steps):
        d = df(x)
        if fx == 0.0 or d == 0.0 or not math.isfinite(d):
            break
        xn = x - fx / d
        if not (lo <= xn <= hi):
            break
        fn = f(xn)
        if abs(fn) >= abs(fx):
            break
        x, fx = xn, fn
    return x


def bracketed_root(f, df, lo, hi, xtol=1e-13):
    return polish(f, df, bisect(f, lo, hi, xtol=xtol), lo, hi)
