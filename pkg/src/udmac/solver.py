"""Scalar fixed-point solver used by the contention model."""
from __future__ import annotations

from typing import Callable


class ConvergenceError(RuntimeError):
    """The fixed-point iteration did not reach the requested tolerance."""


def solve_fixed_point(
    f: Callable[[float], float],
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    damping: float = 0.5,
) -> tuple[float, float]:
    """Find x in [lo, hi] with x = f(x); returns (x, |x - f(x)|).

    Bisection on g(x) = x - f(x) when the endpoints bracket a sign change,
    otherwise damped Picard iteration x <- (1-damping) x + damping f(x).
    """
    g = lambda x: x - f(x)  # noqa: E731
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo, 0.0
    if g_hi == 0.0:
        return hi, 0.0

    if g_lo < 0.0 < g_hi or g_hi < 0.0 < g_lo:
        # bisect down to float resolution; the residual check below is the contract
        a, b, ga = lo, hi, g_lo
        for _ in range(max_iter):
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            gm = g(mid)
            if gm == 0.0:
                return mid, 0.0
            if (gm < 0.0) == (ga < 0.0):
                a, ga = mid, gm
            else:
                b = mid
        mid = a if abs(ga) <= abs(g(b)) else b
        res = abs(g(mid))
        if res <= tol:
            return mid, res
        raise ConvergenceError(f"bisection stalled with residual {res:.3e} > {tol:.1e}")

    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        nxt = (1.0 - damping) * x + damping * f(x)
        nxt = min(max(nxt, lo), hi)
        if abs(nxt - x) <= tol and abs(g(nxt)) <= tol:
            return nxt, abs(g(nxt))
        x = nxt
    raise ConvergenceError(f"damped iteration did not converge in {max_iter} steps")
