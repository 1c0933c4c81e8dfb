"""Adaptive Simpson quadrature for the design integrals.

The integrands here (envelope over the root of the level repulsion product)
are smooth and positive, so plain Simpson with Richardson acceptance on each
bisection is enough and keeps the package free of heavyweight dependencies.
"""

from __future__ import annotations


def adaptive_simpson(f, a: float, b: float, rtol: float = 1e-10,
                     atol: float = 0.0, max_depth: int = 48) -> float:
    """Integrate f over [a, b] to a relative tolerance.

    The error estimate on each interval is the usual |S2 - S1| / 15 from one
    Richardson step, and the accepted value includes that correction.
    """
    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _refine(f, a, b, fa, fm, fb, whole, rtol, atol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, rtol, atol, depth):
    mid = 0.5 * (a + b)
    lm = 0.5 * (a + mid)
    rm = 0.5 * (mid + b)
    flm = f(lm)
    frm = f(rm)
    left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
    halves = left + right
    err = halves - whole
    if depth <= 0 or abs(err) <= 15.0 * max(rtol * abs(halves), atol):
        return halves + err / 15.0
    return (
        _refine(f, a, mid, fa, flm, fm, left, rtol, atol, depth - 1)
        + _refine(f, mid, b, fm, frm, fb, right, rtol, atol, depth - 1)
    )
