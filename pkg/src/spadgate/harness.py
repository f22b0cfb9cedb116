"""Scenario execution: CSV emission and analytic-vs-MC validation reports."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .ber import POWER_AXIS, BerPoint, OpticalLink, sweep, thread_count
from .gating import GateTiming
from .mc import (estimate_ber_mc, estimate_moments_mc, estimate_pmf,
                 gaussian_count_pmf, McMoments)
from .photon_stats import count_stats
from .presets import Scenario

BER_HEADER = "axis_value,ber_analytic,ber_mc,mc_halfwidth,tg_star,u0,u1,var0,var1"
MOMENTS_HEADER = ("axis_value,mean,variance,second_moment,"
                  "mc_mean,mc_mean_se,mc_variance,mc_variance_se")
PMF_HEADER = "count,p_exact,p_gaussian"


def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".12g")


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(header + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _point_link(scenario: Scenario, point: BerPoint) -> OpticalLink:
    if point.axis == POWER_AXIS:
        return replace(scenario.link, received_power=point.axis_value)
    return scenario.link


def _ber_rows(scenario: Scenario, seed: int) -> list[BerPoint]:
    points = sweep(scenario.link, scenario.axis, scenario.values,
                   optimize=scenario.optimize, grid_step=scenario.grid_step)
    if scenario.mode == "analytic" or not points:
        return points
    children = np.random.SeedSequence(seed).spawn(len(points))
    enriched = []
    for point, child in zip(points, children):
        result = estimate_ber_mc(
            _point_link(scenario, point), point.gate_on, scenario.mc.trials, child,
            warmup=scenario.mc.warmup, target_errors=scenario.mc.target_errors,
            max_bits=scenario.mc.max_bits)
        enriched.append(replace(point, ber_mc=result.ber, mc_halfwidth=result.halfwidth))
    return enriched


def run_scenario(scenario: Scenario, out_dir=".", seed: int | None = None) -> Path:
    """Execute one scenario and write its CSV; returns the written path.

    BER rows use the fixed header ``axis_value,ber_analytic,ber_mc,
    mc_halfwidth,tg_star,u0,u1,var0,var1`` with the axis value and gate times
    in CLI units (ns for gate sweeps, nW for power sweeps).  Moment and PMF
    scenarios use their own documented headers.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{scenario.name}.csv"
    seed = scenario.mc.seed if seed is None else seed

    if scenario.kind == "ber":
        rows = []
        for p in _ber_rows(scenario, seed):
            tg_star = None if p.tg_star is None else p.tg_star * 1e9
            # axis value leaves in CLI units; ns and nW are both 1e-9 SI
            rows.append((p.axis_value * 1e9, p.ber_analytic, p.ber_mc,
                         p.mc_halfwidth, tg_star, p.u0, p.u1, p.var0, p.var1))
        _write_rows(path, BER_HEADER, rows)
        summary = f"{scenario.name}: {len(rows)} rows"
        if rows:
            summary += f", min analytic BER {min(r[1] for r in rows):.3g}"
        print(summary + f" -> {path}")
        return path

    if scenario.kind == "moments":
        rows = []
        for gate in scenario.values:
            timing = scenario.timing.with_gate_on(gate)
            stats = count_stats(scenario.rate, timing)
            mc: McMoments | None = None
            if scenario.mode in ("mc", "both"):
                mc = estimate_moments_mc(scenario.rate, timing, scenario.mc.trials,
                                         np.random.SeedSequence((seed, int(gate * 1e12))),
                                         warmup=scenario.mc.warmup)
            rows.append((gate * 1e9, stats.mean, stats.variance, stats.second_moment,
                         None if mc is None else mc.mean,
                         None if mc is None else mc.se_mean,
                         None if mc is None else mc.variance,
                         None if mc is None else mc.se_variance))
        _write_rows(path, MOMENTS_HEADER, rows)
        print(f"{scenario.name}: {len(rows)} rows -> {path}")
        return path

    # pmf
    pmf = estimate_pmf(scenario.link, None, scenario.bit, scenario.mc.trials, seed,
                       warmup=scenario.mc.warmup)
    gauss = gaussian_count_pmf(scenario.link, None, scenario.bit, pmf.support)
    rows = [(int(k), p, g) for k, p, g in zip(pmf.support, pmf.probabilities, gauss)]
    _write_rows(path, PMF_HEADER, rows)
    print(f"{scenario.name}: {len(rows)} rows, exact mean {pmf.mean():.3f} -> {path}")
    return path


def run_scenarios(scenarios, out_dir=".", seed: int | None = None) -> list[Path]:
    return [run_scenario(s, out_dir=out_dir, seed=seed) for s in scenarios]


@dataclass(frozen=True)
class ValidationRow:
    rate: float
    gate_on: float
    z_mean: float
    z_variance: float

    def ok(self, threshold: float) -> bool:
        return self.z_mean <= threshold and self.z_variance <= threshold


@dataclass(frozen=True)
class ValidationReport:
    """Per-point |analytic - MC| / SE table; passes iff all below threshold."""

    rows: tuple[ValidationRow, ...]
    z_threshold: float
    trials: int

    @property
    def passed(self) -> bool:
        return all(row.ok(self.z_threshold) for row in self.rows)

    def format_table(self) -> str:
        lines = [f"{'rate_hz':>12} {'gate_on_ns':>11} {'z_mean':>8} {'z_var':>8}  verdict"]
        for row in self.rows:
            verdict = "ok" if row.ok(self.z_threshold) else "FAIL"
            lines.append(f"{row.rate:12.4g} {row.gate_on * 1e9:11.3f} "
                         f"{row.z_mean:8.2f} {row.z_variance:8.2f}  {verdict}")
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: {len(self.rows)} points, "
                     f"threshold {self.z_threshold} SE, {self.trials} symbols/point")
        return "\n".join(lines)


def _z_score(analytic: float, estimate: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if analytic == estimate else math.inf
    return abs(analytic - estimate) / se


def _validate_point(args) -> ValidationRow:
    rate, timing, trials, child, mc_dead_time, warmup = args
    stats = count_stats(rate, timing)
    mc_timing = timing if mc_dead_time is None else replace(timing, dead_time=mc_dead_time)
    mc = estimate_moments_mc(rate, mc_timing, trials, child, warmup=warmup)
    return ValidationRow(
        rate=rate,
        gate_on=timing.gate_on,
        z_mean=_z_score(stats.mean, mc.mean, mc.se_mean),
        z_variance=_z_score(stats.variance, mc.variance, mc.se_variance),
    )


def validate(rates, gate_on_values, symbol_period: float, dead_time: float,
             trials: int = 1_000_000, seed: int = 0, z_threshold: float = 4.0,
             mc_dead_time: float | None = None, warmup: int = 10) -> ValidationReport:
    """Cross-check closed-form moments against the Monte-Carlo receiver on a
    (rate, gate_on) grid.

    ``mc_dead_time`` deliberately desynchronizes the simulator's dead time
    from the analytic one; it exists so the report's failure path can be
    exercised (fault injection).
    """
    points = [(float(rate), GateTiming(symbol_period, float(gate), dead_time))
              for rate in rates for gate in gate_on_values]
    if not points:
        raise ValueError("validation grid must be nonempty")
    children = np.random.SeedSequence(seed).spawn(len(points))
    work = [(rate, timing, trials, child, mc_dead_time, warmup)
            for (rate, timing), child in zip(points, children)]
    workers = min(thread_count(), len(work))
    if workers <= 1:
        rows = [_validate_point(w) for w in work]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_validate_point, work))
    return ValidationReport(rows=tuple(rows), z_threshold=z_threshold, trials=trials)
