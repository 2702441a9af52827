"""Bracketed root finding for strictly monotone scalar functions."""

from __future__ import annotations


def bisect_increasing(fn, lo: float, hi: float, max_iter: int = 200) -> float:
    """Root of an increasing fn with fn(lo) <= 0 <= fn(hi).

    Bisects until the bracket collapses to adjacent floats, so the result
    is accurate to machine resolution regardless of the initial bracket.
    """
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo > 0.0 or fhi < 0.0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
