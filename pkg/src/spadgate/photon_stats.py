"""Closed-form statistics of the photon count detected per symbol.

Model: one passively quenched SPAD pixel illuminated at a constant incident
photon rate, gated ON for the first ``gate_on`` seconds of every symbol frame.
Every gate-ON arrival (detected or not) paralyzes the pixel for ``dead_time``
seconds; gate-OFF arrivals trigger nothing and leave the detector state
untouched.  Under these rules the per-symbol detected count K has closed
first and second moments built from one ingredient: the probability that an
arrival at offset ``s`` into the gate survives its look-back window, which is
``exp(-rate * (gate_overlap(s) + s))``.

The second moment splits the gate into dead-time-long segments (each can
detect at most one photon) and sums pairwise correlations.  Four segment-pair
geometries occur, exposed here as :func:`corr_adjacent`,
:func:`corr_nonadjacent` (history-free pairs, closed forms) and
:func:`corr_first_adjacent`, :func:`corr_first_nonadjacent` (pairs involving
the first segment, whose history crosses into previous frames and needs the
overlap integral).  They are public so the segment-pair aggregation can be
checked term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gating import BREAKPOINT_SNAP, GateTiming, _gate_overlap_array
from .quadrature import DEFAULT_REL_TOL, breakpoints_of_gate_overlap, integrate_piecewise

# Variance more negative than this signals inconsistent quadrature instead of
# roundoff; anything in [-VARIANCE_TOLERANCE, 0) is clamped to zero.
VARIANCE_TOLERANCE = 1e-9


class ConsistencyError(ArithmeticError):
    """Computed moments violate an exact inequality by more than quadrature noise."""


@dataclass(frozen=True)
class CountStats:
    """Mean, second moment and variance of the per-symbol detected count."""

    mean: float
    second_moment: float
    variance: float

    def __post_init__(self) -> None:
        if self.mean < 0:
            raise ConsistencyError(f"mean count must be >= 0, got {self.mean}")
        if self.second_moment < self.mean - VARIANCE_TOLERANCE:
            raise ConsistencyError(
                f"second moment {self.second_moment} below mean {self.mean}; "
                "counts are nonnegative integers so E[K^2] >= E[K]"
            )
        if self.variance < 0:
            raise ConsistencyError(f"variance must be >= 0, got {self.variance}")


def transfer_rate(rate: float, dead_time: float) -> float:
    """Detected photon rate of a free-running passively quenched pixel.

    ``rate * exp(-rate * dead_time)``: the paralyzable counter's throughput
    peaks at an incident rate of ``1/dead_time`` and rolls off beyond it.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if not dead_time > 0:
        raise ValueError(f"dead_time must be > 0, got {dead_time}")
    return rate * math.exp(-rate * dead_time)


def _survival_integral(rate: float, timing: GateTiming, upper: float,
                       weight=None, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """``int_0^upper exp(-rate*(G(s)+s)) * weight(s) ds`` over G's kink-free pieces."""
    if upper <= 0.0:
        return 0.0
    ts, tg, td = timing.symbol_period, timing.gate_on, timing.dead_time
    bps = breakpoints_of_gate_overlap(timing, 0.0, upper)

    def integrand(s):
        exposure = _gate_overlap_array(s, ts, tg, td) + s
        values = np.exp(-rate * exposure)
        return values if weight is None else values * weight(s)

    return integrate_piecewise(integrand, bps, rel_tol)


def mean_count(rate: float, timing: GateTiming, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Mean detected count per symbol.

    Only the first ``min(gate_on, dead_time)`` of the gate feels ISI from
    previous frames; detections there happen with the survival probability of
    the look-back window.  The remainder of the gate (if any) behaves like a
    free-running detector in steady state and contributes
    ``(gate_on - dead_time) * transfer_rate``.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0.0:
        return 0.0
    upper = min(timing.gate_on, timing.dead_time)
    value = rate * _survival_integral(rate, timing, upper, rel_tol=rel_tol)
    excess = timing.gate_on - timing.dead_time
    if excess > 0:
        value += excess * transfer_rate(rate, timing.dead_time)
    return value


def _check_segment_span(t: float, dead_time: float) -> float:
    if t < -BREAKPOINT_SNAP or t > dead_time + BREAKPOINT_SNAP:
        raise ValueError(f"segment span t must be in [0, dead_time], got {t}")
    return min(max(float(t), 0.0), dead_time)


def corr_adjacent(t: float, rate: float, dead_time: float) -> float:
    """Count correlation of two adjacent dead-time segments, neither of them
    the first one: ``rate^2 t^2 exp(-2 rate dead_time) / 2``.

    ``t`` is the span of the later segment (the last one may be shorter than
    ``dead_time``).
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    t = _check_segment_span(t, dead_time)
    return 0.5 * rate**2 * t**2 * math.exp(-2.0 * rate * dead_time)


def corr_nonadjacent(t: float, rate: float, dead_time: float) -> float:
    """Correlation of two non-adjacent, non-first segments.

    Their gap exceeds the dead time, so the counts are independent and the
    correlation factors into the two single-segment detection probabilities:
    ``rate^2 dead_time t exp(-2 rate dead_time)``.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    t = _check_segment_span(t, dead_time)
    return rate**2 * dead_time * t * math.exp(-2.0 * rate * dead_time)


def corr_first_adjacent(t: float, rate: float, timing: GateTiming,
                        rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Correlation of the first segment with its adjacent follower.

    The first segment's look-back reaches previous frames, so its survival
    probability uses the gate-overlap exposure:

        rate^2 exp(-rate dead_time) int_0^t exp(-rate(G(s)+s)) (t - s) ds
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    t = _check_segment_span(t, timing.dead_time)
    if rate == 0.0 or t == 0.0:
        return 0.0
    integral = _survival_integral(rate, timing, t, weight=lambda s: t - s, rel_tol=rel_tol)
    return rate**2 * math.exp(-rate * timing.dead_time) * integral


def corr_first_nonadjacent(t: float, rate: float, timing: GateTiming,
                           rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Correlation of the first segment with a non-adjacent follower: the
    follower's detection probability ``rate t exp(-rate dead_time)`` times the
    first segment's detection probability."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    t = _check_segment_span(t, timing.dead_time)
    if rate == 0.0 or t == 0.0:
        return 0.0
    first_prob = rate * _survival_integral(rate, timing, timing.dead_time, rel_tol=rel_tol)
    return rate * t * math.exp(-rate * timing.dead_time) * first_prob


def _floor_with_snap(x: float) -> int:
    """floor(x) that treats values within float noise of an integer as exact."""
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def _second_moment_given_mean(mean: float, rate: float, timing: GateTiming,
                              rel_tol: float) -> float:
    tg, td = timing.gate_on, timing.dead_time
    # At the exact boundaries the branches agree; equality goes to the
    # higher branch.
    if tg < td - BREAKPOINT_SNAP:
        # at most one detection per symbol: E[K^2] = E[K]
        return mean
    two_dead = tg >= 2.0 * td - BREAKPOINT_SNAP
    upper = td if two_dead else tg - td
    span = tg - td
    integral = _survival_integral(rate, timing, upper,
                                  weight=lambda s: span - s, rel_tol=rel_tol)
    value = mean + 2.0 * rate**2 * math.exp(-rate * td) * integral
    if two_dead:
        value += rate**2 * math.exp(-2.0 * rate * td) * (tg - 2.0 * td) ** 2
    return value


def second_moment(rate: float, timing: GateTiming, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Second moment of the per-symbol detected count.

    Piecewise in ``gate_on``: below one dead time the count is 0/1 and the
    second moment equals the mean; between one and two dead times a single
    first-segment correlation term is added; beyond two dead times the
    history-free segment pairs contribute the additional closed-form
    ``rate^2 exp(-2 rate dead_time) (gate_on - 2 dead_time)^2``.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0.0:
        return 0.0
    return _second_moment_given_mean(mean_count(rate, timing, rel_tol), rate, timing, rel_tol)


def _finalize_variance(second: float, mean: float) -> float:
    value = second - mean * mean
    if value < -VARIANCE_TOLERANCE:
        raise ConsistencyError(
            f"variance {value} below -{VARIANCE_TOLERANCE}: quadrature of the mean "
            "and second moment are inconsistent"
        )
    return max(value, 0.0)


def variance(rate: float, timing: GateTiming, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Variance of the per-symbol detected count, ``E[K^2] - E[K]^2``.

    Values in ``[-VARIANCE_TOLERANCE, 0)`` are quadrature noise and clamp to
    zero; anything more negative raises :class:`ConsistencyError`.
    """
    return count_stats(rate, timing, rel_tol).variance


def count_stats(rate: float, timing: GateTiming, rel_tol: float = DEFAULT_REL_TOL) -> CountStats:
    """Mean, second moment and variance in one evaluation of the mean integral."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0.0:
        return CountStats(0.0, 0.0, 0.0)
    mean = mean_count(rate, timing, rel_tol)
    second = _second_moment_given_mean(mean, rate, timing, rel_tol)
    return CountStats(mean, second, _finalize_variance(second, mean))


def segment_pair_expansion(rate: float, timing: GateTiming,
                           rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Second moment for ``gate_on >= 2*dead_time`` assembled term by term
    from the four correlation categories.

    With ``m = floor(gate_on / dead_time)`` full segments plus a remainder of
    span ``r = gate_on - m*dead_time``, the pair sum weights are: ``m - 2``
    adjacent pairs of full segments plus one adjacent pair ending on the
    remainder; ``(m-2)(m-3)/2`` non-adjacent full pairs plus ``m - 2`` ending
    on the remainder; one first-adjacent pair; ``m - 2`` first-nonadjacent
    full pairs plus one ending on the remainder.  A zero-length remainder
    contributes nothing.  Kept as an independent cross-check of
    :func:`second_moment`.
    """
    tg, td = timing.gate_on, timing.dead_time
    if tg < 2.0 * td - BREAKPOINT_SNAP:
        raise ValueError("segment-pair expansion applies to gate_on >= 2*dead_time")
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0.0:
        return 0.0
    m = _floor_with_snap(tg / td)
    r = min(max(tg - m * td, 0.0), td)
    pairs = (
        (m - 2) * corr_adjacent(td, rate, td)
        + corr_adjacent(r, rate, td)
        + (m - 2) * (m - 3) / 2.0 * corr_nonadjacent(td, rate, td)
        + (m - 2) * corr_nonadjacent(r, rate, td)
        + corr_first_adjacent(td, rate, timing, rel_tol)
        + (m - 2) * corr_first_nonadjacent(td, rate, timing, rel_tol)
        + corr_first_nonadjacent(r, rate, timing, rel_tol)
    )
    return mean_count(rate, timing, rel_tol) + 2.0 * pairs
