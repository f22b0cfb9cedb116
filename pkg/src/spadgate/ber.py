"""OOK link model: per-pixel photon rates, Gaussian BER and gate optimization.

An N-pixel SPAD array splits the received optical power evenly; the
per-symbol array count is modelled as Gaussian via the central limit theorem
using the per-pixel count statistics, which gives the classic Q-function BER.
The gate-ON interval trades detected signal against dead-time ISI and
background pile-up, so the BER has a nontrivial minimum that is located by
exhaustive grid search.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc

from .gating import GateTiming
from .photon_stats import CountStats, count_stats
from .quadrature import DEFAULT_REL_TOL

# CODATA 2018; both exact in the SI
PLANCK_CONSTANT = 6.62607015e-34  # J s
SPEED_OF_LIGHT = 299792458.0      # m / s

DEFAULT_GRID_STEP = 0.02e-9  # seconds

THREADS_ENV_VAR = "SPAD_GATE_THREADS"


def thread_count() -> int:
    """Worker count for sweep evaluation; SPAD_GATE_THREADS caps it."""
    n = os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap is not None:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {cap!r}")
    return n


@dataclass(frozen=True)
class OpticalLink:
    """Physical description of the OOK link seen by the SPAD array.

    ``received_power`` is the *average* OOK signal power, so bit '1' carries
    ``2*received_power`` of signal plus background and bit '0' background
    only.  Powers in watts, wavelength in meters.
    """

    wavelength: float
    pde: float
    received_power: float
    background_power: float
    array_size: int
    timing: GateTiming

    def __post_init__(self) -> None:
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be > 0, got {self.wavelength}")
        if not 0 < self.pde <= 1:
            raise ValueError(f"pde must be in (0, 1], got {self.pde}")
        if self.received_power < 0:
            raise ValueError(f"received_power must be >= 0, got {self.received_power}")
        if self.background_power < 0:
            raise ValueError(f"background_power must be >= 0, got {self.background_power}")
        if int(self.array_size) != self.array_size or self.array_size < 1:
            raise ValueError(f"array_size must be a positive integer, got {self.array_size}")

    @classmethod
    def from_pixel_rates(cls, rate0: float, rate1: float, array_size: int,
                         timing: GateTiming, wavelength: float = 785e-9,
                         pde: float = 0.18) -> "OpticalLink":
        """Build the link whose per-pixel rates equal (rate0, rate1)."""
        if not 0 <= rate0 <= rate1:
            raise ValueError(f"need 0 <= rate0 <= rate1, got ({rate0}, {rate1})")
        energy = photon_energy(wavelength)
        background = rate0 * array_size * energy / pde
        received = (rate1 - rate0) * array_size * energy / (2.0 * pde)
        return cls(wavelength, pde, received, background, array_size, timing)


@dataclass(frozen=True)
class RatePair:
    """Per-pixel incident photon rates for bit '0' and bit '1' (Hz)."""

    rate0: float
    rate1: float

    def __post_init__(self) -> None:
        if not 0 <= self.rate0 <= self.rate1:
            raise ValueError(f"need 0 <= rate0 <= rate1, got ({self.rate0}, {self.rate1})")


@dataclass(frozen=True)
class BerPoint:
    """One row of a sweep.  Times in seconds; moments are per pixel."""

    axis: str
    axis_value: float
    gate_on: float
    ber_analytic: float
    u0: float
    u1: float
    var0: float
    var1: float
    tg_star: float | None = None
    ber_mc: float | None = None
    mc_halfwidth: float | None = None


def photon_energy(wavelength: float) -> float:
    if not wavelength > 0:
        raise ValueError(f"wavelength must be > 0, got {wavelength}")
    return PLANCK_CONSTANT * SPEED_OF_LIGHT / wavelength


def pixel_rates(link: OpticalLink) -> RatePair:
    """Per-pixel incident photon rates for the two OOK symbols.

    Bit '1' carries twice the average signal power plus background; the total
    photon flux divides evenly over the array.
    """
    denom = link.array_size * photon_energy(link.wavelength)
    rate0 = link.pde * link.background_power / denom
    rate1 = link.pde * (2.0 * link.received_power + link.background_power) / denom
    return RatePair(rate0, rate1)


def bit_moments(link: OpticalLink, gate_on: float | None = None,
                rel_tol: float = DEFAULT_REL_TOL) -> tuple[CountStats, CountStats]:
    """Per-pixel count statistics conditioned on the transmitted bit."""
    timing = link.timing if gate_on is None else link.timing.with_gate_on(gate_on)
    rates = pixel_rates(link)
    return (count_stats(rates.rate0, timing, rel_tol),
            count_stats(rates.rate1, timing, rel_tol))


def q_function(x: float) -> float:
    """Standard normal tail probability, ``0.5*erfc(x/sqrt(2))``; stable in
    the deep-tail regime."""
    return 0.5 * float(erfc(x / math.sqrt(2.0)))


def _ber_from_moments(stats0: CountStats, stats1: CountStats, array_size: int) -> float:
    sigma = math.sqrt(stats0.variance) + math.sqrt(stats1.variance)
    separation = stats1.mean - stats0.mean
    if sigma == 0.0:
        return 0.0 if separation > 0 else 0.5
    return q_function(math.sqrt(array_size) * separation / sigma)


def ber_gaussian(link: OpticalLink, gate_on: float | None = None,
                 rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Gaussian-approximation BER of the array receiver at a gate-ON interval.

    ``Q(sqrt(N) (u1 - u0) / (sigma1 + sigma0))`` with per-pixel moments taken
    at the two OOK rates.  Degenerate zero-spread cases return 0 when the
    means separate and 0.5 when they coincide.
    """
    stats0, stats1 = bit_moments(link, gate_on, rel_tol)
    return _ber_from_moments(stats0, stats1, link.array_size)


def decision_threshold(link: OpticalLink, gate_on: float | None = None,
                       rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Array-count decision threshold consistent with the Gaussian BER model:
    the point where the two scaled Gaussians balance,
    ``(sigma0 N u1 + sigma1 N u0) / (sigma0 + sigma1)``."""
    stats0, stats1 = bit_moments(link, gate_on, rel_tol)
    n = link.array_size
    s0 = math.sqrt(stats0.variance)
    s1 = math.sqrt(stats1.variance)
    if s0 + s1 == 0.0:
        return 0.5 * n * (stats0.mean + stats1.mean)
    return (s0 * n * stats1.mean + s1 * n * stats0.mean) / (s0 + s1)


def _gate_grid(symbol_period: float, grid_step: float) -> np.ndarray:
    n = int(math.floor(symbol_period / grid_step + 1e-9))
    grid = grid_step * np.arange(1, n + 1)
    if grid.size == 0 or grid[-1] < symbol_period - 1e-15:
        grid = np.append(grid, symbol_period)
    else:
        grid[-1] = symbol_period  # absorb roundoff so the endpoint is exact
    return grid


def optimize_gate(link: OpticalLink, grid_step: float = DEFAULT_GRID_STEP,
                  rel_tol: float = DEFAULT_REL_TOL,
                  refine: bool = False) -> tuple[float, float]:
    """Exhaustive search of the BER minimum over the gate-ON interval.

    Evaluates ``{grid_step, 2*grid_step, ..., symbol_period}`` and breaks ties
    toward the larger interval (more detected signal).  The BER can jump where
    the gate-OFF interval shrinks below the dead time, so no derivative-based
    search is attempted; ``refine=True`` adds a golden-section polish within
    one grid step of the best point.
    """
    if not grid_step > 0:
        raise ValueError(f"grid_step must be > 0, got {grid_step}")
    best_tg = None
    best_ber = math.inf
    for tg in _gate_grid(link.timing.symbol_period, grid_step):
        value = ber_gaussian(link, float(tg), rel_tol)
        if value <= best_ber:
            best_ber = value
            best_tg = float(tg)
    if refine:
        lo = max(best_tg - grid_step, 0.25 * grid_step)
        hi = min(best_tg + grid_step, link.timing.symbol_period)
        tg, value = _golden_section(lambda x: ber_gaussian(link, x, rel_tol), lo, hi)
        if value < best_ber or (value == best_ber and tg > best_tg):
            best_tg, best_ber = tg, value
    return best_tg, best_ber


def _golden_section(f, lo: float, hi: float, iterations: int = 60) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iterations):
        if f1 > f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
    return (x2, f2) if f2 < f1 else (x1, f1)


GATE_AXIS = "gate_on"
POWER_AXIS = "received_power"


def _sweep_point(link: OpticalLink, axis: str, value: float, optimize: bool,
                 grid_step: float, rel_tol: float) -> BerPoint:
    tg_star = None
    if axis == GATE_AXIS:
        gate_on = value
    else:
        link = replace(link, received_power=value)
        gate_on = link.timing.gate_on
        if optimize:
            gate_on, _ = optimize_gate(link, grid_step, rel_tol)
            tg_star = gate_on
    stats0, stats1 = bit_moments(link, gate_on, rel_tol)
    return BerPoint(
        axis=axis,
        axis_value=value,
        gate_on=gate_on,
        ber_analytic=_ber_from_moments(stats0, stats1, link.array_size),
        u0=stats0.mean,
        u1=stats1.mean,
        var0=stats0.variance,
        var1=stats1.variance,
        tg_star=tg_star,
    )


def sweep(link: OpticalLink, axis: str, values, *, optimize: bool = False,
          grid_step: float = DEFAULT_GRID_STEP,
          rel_tol: float = DEFAULT_REL_TOL) -> list[BerPoint]:
    """Analytic BER rows along a gate-ON or received-power axis.

    With ``axis == "received_power"`` and ``optimize=True`` every point uses
    its own optimal gate-ON interval.  Points are evaluated in parallel when
    more than one worker is available, but the returned list always follows
    the input order and is independent of the worker count.
    """
    if axis not in (GATE_AXIS, POWER_AXIS):
        raise ValueError(f"axis must be {GATE_AXIS!r} or {POWER_AXIS!r}, got {axis!r}")
    values = [float(v) for v in values]
    if any(v <= 0 for v in values):
        raise ValueError("sweep values must be positive")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be sorted ascending")
    if not values:
        return []
    workers = min(thread_count(), len(values))
    if workers <= 1:
        return [_sweep_point(link, axis, v, optimize, grid_step, rel_tol) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            lambda v: _sweep_point(link, axis, v, optimize, grid_step, rel_tol), values))
