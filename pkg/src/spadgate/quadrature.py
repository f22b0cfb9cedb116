"""Deterministic piecewise Gauss-Legendre integration.

The count-statistics integrands are analytic except at the points where the
gate-overlap profile changes slope, so the strategy is: compute those kinks
exactly, then apply an order-15 Gauss-Legendre rule with adaptive bisection
on each smooth piece.  Everything is pure and deterministic; identical inputs
give bit-identical results.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .gating import BREAKPOINT_SNAP, GateTiming, _ps_fraction

DEFAULT_REL_TOL = 1e-12
MAX_BISECTIONS = 30

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(15)


class QuadratureError(ArithmeticError):
    """Adaptive refinement hit the bisection limit before the tolerance.

    ``achieved_rel_error`` carries the relative error estimate that was
    actually reached.
    """

    def __init__(self, message: str, achieved_rel_error: float):
        super().__init__(message)
        self.achieved_rel_error = achieved_rel_error


def breakpoints_of_gate_overlap(timing: GateTiming, a: float, b: float) -> np.ndarray:
    """All points of ``[a, b]`` where the gate-overlap profile has a kink.

    Kinks happen where the look-back window crosses a frame boundary
    (``s = dead_time - k*symbol_period``) and where the partial-frame clamp
    activates (``s = dead_time + gate_on - (k+1)*symbol_period``).  The
    endpoints are always included.  Whole-picosecond durations are resolved
    in exact arithmetic so that breakpoints land exactly.
    """
    dead = timing.dead_time
    if not (-BREAKPOINT_SNAP <= a <= b <= dead + BREAKPOINT_SNAP):
        raise ValueError(f"[a, b] must satisfy 0 <= a <= b <= dead_time, got [{a}, {b}]")
    if timing.free_running:
        # overlap profile is affine (dead_time - s): no interior kinks
        return np.asarray([float(a), float(b)])
    ts = _ps_fraction(timing.symbol_period)
    tg = _ps_fraction(timing.gate_on)
    td = _ps_fraction(timing.dead_time)
    exact = ts is not None and tg is not None and td is not None
    if not exact:
        ts, tg, td = (Fraction(timing.symbol_period), Fraction(timing.gate_on),
                      Fraction(timing.dead_time))
    lo, hi = Fraction(float(a)), Fraction(float(b))

    points = set()
    k = 0
    while True:
        frame = td - k * ts           # floor-term step
        clamp = td + tg - (k + 1) * ts  # partial-frame clamp activation
        if frame < lo and clamp < lo:
            break
        for cand in (frame, clamp):
            if lo < cand < hi:
                points.add(cand)
        k += 1

    interior = sorted(float(p) for p in points)
    merged = [float(a)]
    for p in interior:
        if p - merged[-1] > BREAKPOINT_SNAP and float(b) - p > BREAKPOINT_SNAP:
            merged.append(p)
    merged.append(float(b))
    return np.asarray(merged)


def _gauss(f, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(_WEIGHTS @ np.asarray(f(mid + half * _NODES), dtype=float))


def _refine(f, a, b, whole, tol, depth):
    """Recursive bisection; returns (value, error estimate, converged)."""
    mid = 0.5 * (a + b)
    left = _gauss(f, a, mid)
    right = _gauss(f, mid, b)
    delta = left + right - whole
    if abs(delta) <= tol:
        return left + right, abs(delta), True
    if depth <= 0 or mid <= a or mid >= b:
        # out of bisection budget or float resolution
        return left + right, abs(delta), False
    vl, el, cl = _refine(f, a, mid, left, 0.5 * tol, depth - 1)
    vr, er, cr = _refine(f, mid, b, right, 0.5 * tol, depth - 1)
    return vl + vr, el + er, cl and cr


def integrate_piecewise(f, breakpoints, rel_tol: float = DEFAULT_REL_TOL,
                        max_depth: int = MAX_BISECTIONS) -> float:
    """Integrate a vectorized integrand over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` must map an ndarray of abscissae to an ndarray of values and be
    smooth on the open interior of every subinterval.  Each piece is refined
    by bisection until its Gauss-Legendre error estimate is below its share
    of ``rel_tol`` (relative to the integral's magnitude).

    Raises
    ------
    QuadratureError
        If some piece is still above tolerance after ``max_depth``
        bisections; the achieved relative error estimate is attached.
    """
    bps = np.asarray(breakpoints, dtype=float)
    if bps.ndim != 1 or bps.size < 2:
        raise ValueError("breakpoints must hold at least the two endpoints")
    if np.any(np.diff(bps) <= 0):
        raise ValueError("breakpoints must be strictly increasing")

    pieces = list(zip(bps[:-1], bps[1:]))
    coarse = [_gauss(f, x, y) for x, y in pieces]
    scale = max(sum(abs(c) for c in coarse), 1e-300)
    tol_piece = rel_tol * scale / len(pieces)

    total = 0.0
    err = 0.0
    converged = True
    for (x, y), c in zip(pieces, coarse):
        v, e, ok = _refine(f, x, y, c, tol_piece, max_depth)
        total += v
        err += e
        converged = converged and ok
    if not converged:
        achieved = err / max(abs(total), scale)
        raise QuadratureError(
            f"quadrature did not converge after {max_depth} bisections/piece: "
            f"achieved relative error {achieved:.3e} > requested {rel_tol:.3e}",
            achieved_rel_error=achieved,
        )
    return total
