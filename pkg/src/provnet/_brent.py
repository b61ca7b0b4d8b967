"""Bounded scalar maximization: golden-section steps with parabolic
interpolation (Brent's method)."""

import math
from dataclasses import dataclass

_GOLD = 0.5 * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class BrentResult:
    x: float
    fx: float
    iterations: int
    width: float
    converged: bool


def maximize(f, a, b, xtol=1e-8, maxiter=500) -> BrentResult:
    """Maximize ``f`` on ``[a, b]`` until the bracket is narrower than ``xtol``."""
    if a > b:
        a, b = b, a
    # work on g = -f so the bookkeeping reads as minimization
    x = w = v = a + _GOLD * (b - a)
    gx = gw = gv = -f(x)
    d = e = 0.0
    tol = xtol / 4.0
    it = 0
    while it < maxiter:
        mid = 0.5 * (a + b)
        if b - a <= xtol:
            return BrentResult(x, -gx, it, b - a, True)
        it += 1
        use_golden = True
        if abs(e) > tol:
            r = (x - w) * (gx - gv)
            q = (x - v) * (gx - gw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < 2 * tol or b - u < 2 * tol:
                    d = tol if mid >= x else -tol
                use_golden = False
        if use_golden:
            e = (a - x) if x >= mid else (b - x)
            d = _GOLD * e
        u = x + d if abs(d) >= tol else x + math.copysign(tol, d)
        gu = -f(u)
        if gu <= gx:
            if u >= x:
                a = x
            else:
                b = x
            v, gv, w, gw, x, gx = w, gw, x, gx, u, gu
        else:
            if u < x:
                a = u
            else:
                b = u
            if gu <= gw or w == x:
                v, gv, w, gw = w, gw, u, gu
            elif gu <= gv or v == x or v == w:
                v, gv = u, gu
    return BrentResult(x, -gx, it, b - a, False)
