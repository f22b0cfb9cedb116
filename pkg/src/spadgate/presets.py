"""Canned scenario families for the canonical receiver operating points.

All presets share one receiver: 785 nm light, 18% detection efficiency and a
10 ns dead time, in two array sizes (64 pixels at 50 Mbps, 1024 pixels at
200 Mbps).  Builders cross-check their parameters against these constants at
load time so the reproduced operating points cannot drift silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ber import DEFAULT_GRID_STEP, GATE_AXIS, POWER_AXIS, OpticalLink, pixel_rates
from .gating import GateTiming

WAVELENGTH = 785e-9     # meters
PDE = 0.18
DEAD_TIME = 10e-9       # seconds

SMALL_ARRAY = 64        # 50 Mbps -> 20 ns symbols
SMALL_SYMBOL = 20e-9
LARGE_ARRAY = 1024      # 200 Mbps -> 5 ns symbols
LARGE_SYMBOL = 5e-9


@dataclass(frozen=True)
class McSettings:
    """Monte-Carlo knobs: trials are bits for BER runs, symbols per point for
    moment runs and samples for PMF runs."""

    trials: int = 200_000
    seed: int = 20240
    warmup: int = 10
    target_errors: int = 100
    max_bits: int = 2_000_000


@dataclass(frozen=True)
class Scenario:
    """One runnable configuration: a sweep plus output and MC settings.

    BER and PMF scenarios carry a link; moment scenarios carry an incident
    rate plus a base timing and sweep the gate-ON values directly.
    """

    name: str
    kind: str                      # "ber" | "moments" | "pmf"
    mode: str = "analytic"         # "analytic" | "mc" | "both"
    link: OpticalLink | None = None
    rate: float | None = None      # incident rate for moment scenarios (Hz)
    base_timing: GateTiming | None = None
    axis: str | None = None
    values: tuple[float, ...] = ()
    optimize: bool = False
    grid_step: float = DEFAULT_GRID_STEP
    bit: int | None = None         # conditioning bit for PMF scenarios
    mc: McSettings = field(default_factory=McSettings)

    def __post_init__(self) -> None:
        if self.kind not in ("ber", "moments", "pmf"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.mode not in ("analytic", "mc", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.kind == "ber" and (self.link is None or self.axis not in (GATE_AXIS, POWER_AXIS)):
            raise ValueError("ber scenarios need a link and a sweep axis")
        if self.kind == "moments" and (self.rate is None or self.base_timing is None):
            raise ValueError("moment scenarios need an incident rate and a base timing")
        if self.kind == "pmf" and (self.link is None or self.bit not in (0, 1)):
            raise ValueError("pmf scenarios need a link and a conditioning bit")

    @property
    def timing(self) -> GateTiming:
        if self.link is not None:
            return self.link.timing
        if self.base_timing is not None:
            return self.base_timing
        raise ValueError(f"scenario {self.name} carries no timing")


def _check(condition: bool, what: str) -> None:
    if not condition:
        raise RuntimeError(f"preset parameter drift: {what}")


def _canonical_link(received_nw: float, background_nw: float, array_size: int,
                    symbol_period: float) -> OpticalLink:
    link = OpticalLink(
        wavelength=WAVELENGTH,
        pde=PDE,
        received_power=received_nw * 1e-9,
        background_power=background_nw * 1e-9,
        array_size=array_size,
        timing=GateTiming(symbol_period, symbol_period, DEAD_TIME),
    )
    _check(link.wavelength == 785e-9, "wavelength must be 785 nm")
    _check(link.pde == 0.18, "detection efficiency must be 0.18")
    _check(link.timing.dead_time == 10e-9, "dead time must be 10 ns")
    _check(array_size in (SMALL_ARRAY, LARGE_ARRAY), "array size must be 64 or 1024")
    if array_size == SMALL_ARRAY:
        _check(symbol_period == SMALL_SYMBOL, "64-pixel presets run at 20 ns symbols")
    else:
        _check(symbol_period == LARGE_SYMBOL, "1024-pixel presets run at 5 ns symbols")
    return link


def _ns(values) -> tuple[float, ...]:
    return tuple(float(v) * 1e-9 for v in values)


def fig3() -> list[Scenario]:
    """Count mean/variance versus gate-ON time at three incident rates."""
    rates = (1e7, 1e8, 5e8)
    gates = _ns(range(1, 21))
    timing = GateTiming(SMALL_SYMBOL, SMALL_SYMBOL, DEAD_TIME)
    _check(timing.symbol_period == 20e-9 and len(gates) == 20,
           "moment grid is 1..20 ns at 20 ns symbols")
    return [
        Scenario(name=f"fig3_rate{rate:.0e}", kind="moments", mode="both",
                 rate=rate, values=gates, base_timing=timing,
                 mc=McSettings(trials=200_000))
        for rate in rates
    ]


def fig4() -> list[Scenario]:
    """Exact vs Gaussian conditional count PMFs for a free-running array."""
    timing = GateTiming(50e-9, 50e-9, DEAD_TIME)
    link = OpticalLink.from_pixel_rates(2e7, 7e7, SMALL_ARRAY, timing,
                                        wavelength=WAVELENGTH, pde=PDE)
    rp = pixel_rates(link)
    _check(abs(rp.rate0 - 2e7) < 1.0 and abs(rp.rate1 - 7e7) < 1.0,
           "PMF preset pixel rates must be 2e7 / 7e7 Hz")
    return [
        Scenario(name=f"fig4_bit{bit}", kind="pmf", mode="mc", link=link, bit=bit,
                 mc=McSettings(trials=200_000))
        for bit in (0, 1)
    ]


def fig5() -> list[Scenario]:
    """BER versus gate-ON time, 64 pixels, 7 nW background."""
    gates = _ns(np.round(np.arange(0.2, 20.0 + 1e-9, 0.2), 10))
    received_nw = (8.0, 10.0, 12.0, 15.0)
    background_nw = 7.0
    _check(background_nw == 7.0 and received_nw == (8.0, 10.0, 12.0, 15.0),
           "gate sweep runs at 7 nW background for 8/10/12/15 nW signal")
    return [
        Scenario(name=f"fig5_pr{received:g}nw", kind="ber",
                 link=_canonical_link(received, background_nw, SMALL_ARRAY, SMALL_SYMBOL),
                 axis=GATE_AXIS, values=gates)
        for received in received_nw
    ]


def fig6() -> list[Scenario]:
    """Optimal gate-ON time versus signal power, 64 pixels."""
    powers_nw = (1, 2, 3, 4, 5, 6, 7, 8, 10, 12)
    _check(1 in powers_nw and 10 in powers_nw, "power grid must contain 1 and 10 nW")
    return [
        Scenario(name=f"fig6_pb{background:g}nw", kind="ber",
                 link=_canonical_link(1.0, background, SMALL_ARRAY, SMALL_SYMBOL),
                 axis=POWER_AXIS, values=_ns(powers_nw), optimize=True)
        for background in (0.5, 1.5, 3.0)
    ]


def fig7() -> list[Scenario]:
    """Gated (optimized) vs free-running BER over signal power, 64 pixels."""
    powers_nw = (1, 2, 3, 4, 5, 6, 7, 8)
    backgrounds_nw = (1.5, 3.0)
    _check(4 in powers_nw and 3.0 in backgrounds_nw,
           "power grid must contain the 4 nW signal / 3 nW background benchmark")
    out = []
    for background in backgrounds_nw:
        link = _canonical_link(1.0, background, SMALL_ARRAY, SMALL_SYMBOL)
        out.append(Scenario(name=f"fig7_pb{background:g}nw_gated", kind="ber", mode="both",
                            link=link, axis=POWER_AXIS, values=_ns(powers_nw), optimize=True))
        out.append(Scenario(name=f"fig7_pb{background:g}nw_free", kind="ber", mode="both",
                            link=link, axis=POWER_AXIS, values=_ns(powers_nw)))
    return out


def fig8() -> list[Scenario]:
    """Optimal gate-ON time versus signal power, 1024 pixels, 5 ns symbols."""
    powers_nw = (30, 40, 50, 60, 70)
    _check(40 in powers_nw and 70 in powers_nw, "power grid must contain 40 and 70 nW")
    return [
        Scenario(name=f"fig8_pb{background:g}nw", kind="ber",
                 link=_canonical_link(30.0, background, LARGE_ARRAY, LARGE_SYMBOL),
                 axis=POWER_AXIS, values=_ns(powers_nw), optimize=True)
        for background in (40.0, 80.0)
    ]


def fig9() -> list[Scenario]:
    """Gated vs free-running BER over signal power, 1024 pixels."""
    powers_nw = (30, 40, 50, 60, 63, 70)
    backgrounds_nw = (40.0, 80.0)
    _check(63 in powers_nw and 80.0 in backgrounds_nw,
           "power grid must contain the 63 nW signal / 80 nW background benchmark")
    out = []
    for background in backgrounds_nw:
        link = _canonical_link(30.0, background, LARGE_ARRAY, LARGE_SYMBOL)
        mc = McSettings(trials=50_000, max_bits=1_000_000)
        out.append(Scenario(name=f"fig9_pb{background:g}nw_gated", kind="ber", mode="both",
                            link=link, axis=POWER_AXIS, values=_ns(powers_nw),
                            optimize=True, mc=mc))
        out.append(Scenario(name=f"fig9_pb{background:g}nw_free", kind="ber", mode="both",
                            link=link, axis=POWER_AXIS, values=_ns(powers_nw), mc=mc))
    return out


PRESETS = {
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
    "fig7": fig7,
    "fig8": fig8,
    "fig9": fig9,
}


def build_preset(name: str) -> list[Scenario]:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r}; known presets: {known}")
    return PRESETS[name]()
