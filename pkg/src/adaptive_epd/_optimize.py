from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    min_iter: int = 0,
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on [lo, hi]; returns (argmin, f(argmin)).

    Endpoints are also checked, so a monotone objective returns the boundary.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while it < max_iter and (it < min_iter or abs(b - a) > tol):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    best = (c, fc) if fc <= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx < best[1]:
            best = (x, fx)
    return best
