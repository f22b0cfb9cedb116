"""Gate timing geometry of a time-gated SPAD pixel.

The detector is biased active for the first ``gate_on`` seconds of every
``symbol_period``-long frame and blind for the rest.  A passively quenched
pixel is paralyzed for ``dead_time`` seconds after *every* arrival that hits
an active window, so whether an arrival at offset ``s`` into the current gate
can be detected depends on how much gate-ON time falls inside the look-back
window of length ``dead_time - s`` that reaches into previous frames.  That
exposure is :func:`gate_overlap`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

# Points closer than this to a frame/clamp boundary are snapped onto it.  The
# overlap profile is continuous, so snapping changes the value by at most the
# snap distance; without it the floor() below amplifies double roundoff.
BREAKPOINT_SNAP = 1e-15  # seconds

_PS = 10**12  # picoseconds per second


@dataclass(frozen=True)
class GateTiming:
    """Symbol period, gate-ON interval and dead time of one pixel, in seconds.

    ``gate_on == symbol_period`` is the free-running (ungated) receiver.
    """

    symbol_period: float
    gate_on: float
    dead_time: float

    def __post_init__(self) -> None:
        if not self.symbol_period > 0:
            raise ValueError(f"symbol_period must be > 0, got {self.symbol_period}")
        if abs(self.gate_on - self.symbol_period) <= BREAKPOINT_SNAP:
            # float sweep grids routinely overshoot the free-running endpoint
            # by an ulp; snap instead of rejecting
            object.__setattr__(self, "gate_on", self.symbol_period)
        if not 0 < self.gate_on <= self.symbol_period:
            raise ValueError(
                f"gate_on must be in (0, symbol_period], got {self.gate_on} "
                f"with symbol_period {self.symbol_period}"
            )
        if not self.dead_time > 0:
            raise ValueError(f"dead_time must be > 0, got {self.dead_time}")

    @classmethod
    def from_ns(cls, symbol_period_ns: float, gate_on_ns: float, dead_time_ns: float) -> "GateTiming":
        return cls(symbol_period_ns * 1e-9, gate_on_ns * 1e-9, dead_time_ns * 1e-9)

    @property
    def free_running(self) -> bool:
        return self.gate_on == self.symbol_period

    def with_gate_on(self, gate_on: float) -> "GateTiming":
        return replace(self, gate_on=gate_on)


def _ps_fraction(x: float) -> Fraction | None:
    """Return ``x`` as an exact rational number of seconds if it is a whole
    number of picoseconds (within sub-femtosecond float noise), else None."""
    p = x * 1e12
    r = round(p)
    if r > 0 and abs(p - r) <= 1e-6:
        return Fraction(r, _PS)
    return None


def _gate_overlap_array(s, symbol_period: float, gate_on: float, dead_time: float):
    """Vectorized double-precision overlap profile with boundary snapping.

    Quadrature nodes are strictly interior to the kink-free pieces, so the
    floor here can only misstep within BREAKPOINT_SNAP of a boundary, where
    continuity bounds the value error by the snap distance.
    """
    lookback = dead_time - s
    q = lookback / symbol_period
    m = np.floor(q)
    m = np.where((m + 1.0 - q) * symbol_period <= BREAKPOINT_SNAP, m + 1.0, m)
    partial = np.maximum(lookback - m * symbol_period, 0.0)
    return m * gate_on + np.maximum(partial - (symbol_period - gate_on), 0.0)


def gate_overlap(s: float, timing: GateTiming) -> float:
    """Total gate-ON time inside the look-back window ``(s - dead_time, 0)``.

    ``s`` is the offset of an arrival into the current frame, ``0 <= s <=
    dead_time``; the window reaches backwards across previous frames whose
    gates occupy ``[-k*symbol_period, -k*symbol_period + gate_on)``.  Counting
    whole frames first and clamping the partial frame gives

        m * gate_on + max(lookback - m*symbol_period - (symbol_period - gate_on), 0)

    with ``lookback = dead_time - s`` and ``m = floor(lookback /
    symbol_period)``.  For the free-running receiver this collapses to
    ``dead_time - s``.

    When all three durations are whole picoseconds the floor and clamp are
    evaluated in exact rational arithmetic; otherwise in double precision
    with a snap-to-breakpoint guard of ``BREAKPOINT_SNAP`` seconds.
    """
    s = float(s)
    dead = timing.dead_time
    if s < -BREAKPOINT_SNAP or s > dead + BREAKPOINT_SNAP:
        raise ValueError(f"s must be in [0, dead_time], got {s}")
    s = min(max(s, 0.0), dead)
    ts = _ps_fraction(timing.symbol_period)
    tg = _ps_fraction(timing.gate_on)
    td = _ps_fraction(timing.dead_time)
    if ts is not None and tg is not None and td is not None:
        # the rational dead time may sit a few ulp below the float one
        lookback = max(td - Fraction(s), Fraction(0))
        m = lookback // ts
        partial = lookback - m * ts
        return float(m * tg + max(partial - ts + tg, Fraction(0)))
    return float(_gate_overlap_array(np.float64(s), timing.symbol_period, timing.gate_on, dead))


def gate_phase(times, timing: GateTiming):
    """Offset of each time into its frame; the gate is ON where this is
    below ``gate_on``."""
    t = np.asarray(times, dtype=float)
    return t - np.floor(t / timing.symbol_period) * timing.symbol_period


def warmup_floor(timing: GateTiming) -> int:
    """Minimum number of warm-up symbols needed before per-symbol counts are
    stationary: dead time started in one frame reaches at most this many
    frames ahead."""
    return math.ceil(timing.dead_time / timing.symbol_period) + 1
