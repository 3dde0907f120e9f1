"""Bracketing and bisection helpers shared by the spectral scans."""

from __future__ import annotations

import math


def bisect_root(f, lo, hi, *, xtol=1e-12, flo=None, fhi=None, maxiter=200):
    """Locate the sign change of f on [lo, hi] by bisection.

    Endpoint values may be passed to avoid re-evaluation.  Infinite endpoint
    values are legal; they only contribute their sign.  Returns the midpoint of
    the final bracket.
    """
    if flo is None:
        flo = f(lo)
    if fhi is None:
        fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}] (f: {flo} .. {fhi})")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid == lo or mid == hi:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def dist_to_multiple(x, step):
    """Distance from x to the nearest integer multiple of step."""
    return abs(x - step * round(x / step))
