"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math
from typing import Callable


def round_half_up(x: float) -> int:
    """Round to nearest integer, ties away from zero toward +inf.

    Used for every r*n -> subset-size conversion so that 0.5 cases are
    resolved the same way everywhere (Python's round() would go to even).
    """
    return int(math.floor(x + 0.5))


def snap_to_int(x: float, tol: float = 1e-9) -> float:
    """Replace x by the nearest integer when within tol (absorbs 0.2*10 != 2)."""
    r = round(x)
    return float(r) if abs(x - r) <= tol else float(x)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_minimize(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8, max_iter: int = 200
) -> tuple[float, float]:
    """Golden-section search for a minimum of f on [lo, hi].

    Returns (argmin, f(argmin)). Exactly unimodal functions are located to
    ``tol``; on flat or monotone objectives the search converges to the
    appropriate boundary.
    """
    if hi <= lo:
        raise ValueError(f"empty search interval [{lo}, {hi}]")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)
