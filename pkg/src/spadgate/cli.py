"""spad-gate command line: scenario configs, presets, CSV output, validation.

Configs are JSON with units spelled out in the field names: times in ``*_ns``,
powers in ``*_nw``, rates in ``*_hz``.  Everything is converted to SI once at
ingestion.  Exit codes: 0 success, 1 validation failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .ber import (DEFAULT_GRID_STEP, GATE_AXIS, POWER_AXIS, OpticalLink,
                  optimize_gate, pixel_rates)
from .gating import GateTiming
from .harness import run_scenario, validate
from .mc import apply_gated_dead_time, write_event_trace
from .presets import PRESETS, McSettings, Scenario, build_preset


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _number(cfg: dict, field: str, default=None, minimum=None, strict_min=None):
    if field not in cfg:
        if default is None:
            raise ConfigError(field, "required field is missing")
        return default
    value = cfg[field]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(field, f"expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {value}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(field, f"must be > {strict_min}, got {value}")
    return value


def _integer(cfg: dict, field: str, default=None, minimum=1):
    value = _number(cfg, field, default=default, minimum=minimum)
    if int(value) != value:
        raise ConfigError(field, f"expected an integer, got {value}")
    return int(value)


def _values_ns(cfg: dict, field: str):
    raw = cfg[field]
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list) or any(
            not isinstance(v, (int, float)) or isinstance(v, bool) for v in raw):
        raise ConfigError(field, f"expected a number or list of numbers, got {raw!r}")
    return [float(v) for v in raw]


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            cfg = json.load(handle)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return cfg


def _timing_from(cfg: dict, gate_field: str = "gate_on_ns") -> GateTiming:
    symbol = _number(cfg, "symbol_period_ns", strict_min=0.0) * 1e-9
    dead = _number(cfg, "dead_time_ns", default=10.0, strict_min=0.0) * 1e-9
    gate = symbol
    if gate_field in cfg and isinstance(cfg[gate_field], (int, float)) \
            and not isinstance(cfg[gate_field], bool):
        gate = _number(cfg, gate_field, strict_min=0.0) * 1e-9
    try:
        return GateTiming(symbol, gate, dead)
    except ValueError as exc:
        raise ConfigError("timing", str(exc))


def _link_from(cfg: dict) -> OpticalLink:
    timing = _timing_from(cfg)
    try:
        return OpticalLink(
            wavelength=_number(cfg, "wavelength_nm", default=785.0, strict_min=0.0) * 1e-9,
            pde=_number(cfg, "pde", default=0.18, strict_min=0.0),
            received_power=_number(cfg, "received_power_nw", minimum=0.0) * 1e-9,
            background_power=_number(cfg, "background_power_nw", minimum=0.0) * 1e-9,
            array_size=_integer(cfg, "array_size"),
            timing=timing,
        )
    except ValueError as exc:
        raise ConfigError("link", str(exc))


def _mc_from(cfg: dict, seed_override: int | None) -> McSettings:
    mc = cfg.get("mc", {})
    if not isinstance(mc, dict):
        raise ConfigError("mc", "expected an object")
    seed = _integer(mc, "seed", default=McSettings.seed, minimum=0)
    if seed_override is not None:
        seed = seed_override
    return McSettings(
        trials=_integer(mc, "trials", default=McSettings.trials),
        seed=seed,
        warmup=_integer(mc, "warmup", default=McSettings.warmup, minimum=1),
        target_errors=_integer(mc, "target_errors", default=McSettings.target_errors),
        max_bits=_integer(mc, "max_bits", default=McSettings.max_bits),
    )


def _sweep_from(cfg: dict, link: OpticalLink):
    sweep_cfg = cfg.get("sweep")
    if sweep_cfg is None:
        return GATE_AXIS, (link.timing.gate_on,)
    if not isinstance(sweep_cfg, dict):
        raise ConfigError("sweep", "expected an object with axis and values")
    axis_raw = sweep_cfg.get("axis")
    if axis_raw == "gate_on_ns":
        axis = GATE_AXIS
    elif axis_raw == "received_power_nw":
        axis = POWER_AXIS
    else:
        raise ConfigError("sweep.axis",
                          f"must be gate_on_ns or received_power_nw, got {axis_raw!r}")
    if "values" not in sweep_cfg:
        raise ConfigError("sweep.values", "required field is missing")
    values = _values_ns(sweep_cfg, "values")
    if any(v <= 0 for v in values):
        raise ConfigError("sweep.values", "values must be positive")
    if sorted(values) != values:
        raise ConfigError("sweep.values", "values must be sorted ascending")
    return axis, tuple(v * 1e-9 for v in values)


def _ber_scenario(cfg: dict, name: str, mode: str, seed: int | None) -> Scenario:
    link = _link_from(cfg)
    axis, values = _sweep_from(cfg, link)
    return Scenario(
        name=cfg.get("name", name),
        kind="ber",
        mode=mode,
        link=link,
        axis=axis,
        values=values,
        optimize=bool(cfg.get("optimize_gate", False)),
        grid_step=_number(cfg, "grid_step_ns", default=DEFAULT_GRID_STEP * 1e9,
                          strict_min=0.0) * 1e-9,
        mc=_mc_from(cfg, seed),
    )


def _cmd_stats(args) -> int:
    cfg = _load_config(args.config)
    rates = cfg.get("rates_hz", cfg.get("rate_hz"))
    if rates is None:
        raise ConfigError("rates_hz", "required field is missing")
    if isinstance(rates, (int, float)) and not isinstance(rates, bool):
        rates = [rates]
    if not isinstance(rates, list) or any(
            not isinstance(r, (int, float)) or isinstance(r, bool) or r < 0 for r in rates):
        raise ConfigError("rates_hz", "expected a nonnegative number or list")
    timing = _timing_from(cfg)
    gates = tuple(v * 1e-9 for v in _values_ns(cfg, "gate_on_ns")) \
        if "gate_on_ns" in cfg else (timing.gate_on,)
    mode = cfg.get("mode", args.mode or "analytic")
    for rate in rates:
        scenario = Scenario(
            name=f"{cfg.get('name', 'stats')}_rate{float(rate):.0e}",
            kind="moments", mode=mode, rate=float(rate), base_timing=timing,
            values=gates, mc=_mc_from(cfg, args.seed),
        )
        run_scenario(scenario, out_dir=args.out, seed=args.seed)
    return 0


def _cmd_ber(args) -> int:
    cfg = _load_config(args.config)
    mode = cfg.get("mode", args.mode or "analytic")
    scenario = _ber_scenario(cfg, "ber", mode, args.seed)
    run_scenario(scenario, out_dir=args.out, seed=args.seed)
    return 0


def _cmd_opt_tg(args) -> int:
    cfg = _load_config(args.config)
    link = _link_from(cfg)
    grid_step = _number(cfg, "grid_step_ns", default=DEFAULT_GRID_STEP * 1e9,
                        strict_min=0.0) * 1e-9
    gate, ber_value = optimize_gate(link, grid_step)
    print(f"optimal gate_on: {gate * 1e9:.4g} ns  analytic BER: {ber_value:.6g}")
    single_point = {**cfg, "optimize_gate": True,
                    "sweep": {"axis": "received_power_nw",
                              "values": [link.received_power * 1e9]}}
    scenario = _ber_scenario(single_point, "opt_tg", cfg.get("mode", "analytic"), args.seed)
    run_scenario(scenario, out_dir=args.out, seed=args.seed)
    return 0


def _cmd_mc(args) -> int:
    cfg = _load_config(args.config)
    mode = cfg.get("mode", "mc")
    scenario = _ber_scenario(cfg, "mc", mode, args.seed)
    run_scenario(scenario, out_dir=args.out, seed=args.seed)
    if args.trace:
        _write_trace(scenario, args)
    return 0


def _write_trace(scenario: Scenario, args) -> None:
    link = scenario.link
    timing = link.timing
    n_symbols = args.trace_symbols
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(scenario.mc.seed)))
    rates = pixel_rates(link)
    records = []
    for _ in range(min(link.array_size, 4)):
        bits = rng.integers(0, 2, size=n_symbols)
        times = []
        for k, bit in enumerate(bits):
            lam = rates.rate1 if bit else rates.rate0
            n = rng.poisson(lam * timing.symbol_period)
            times.append(k * timing.symbol_period
                         + np.sort(rng.random(n)) * timing.symbol_period)
        incident = np.concatenate(times) if times else np.empty(0)
        records.append(apply_gated_dead_time(incident, timing))
    write_event_trace(args.trace, records)
    print(f"event trace ({len(records)} pixels, {n_symbols} symbols) -> {args.trace}")


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    rates = cfg.get("rates_hz", [1e7, 1e8, 5e8])
    if not isinstance(rates, list) or not rates:
        raise ConfigError("rates_hz", "expected a nonempty list")
    gates_ns = _values_ns(cfg, "gate_on_ns") if "gate_on_ns" in cfg \
        else [float(v) for v in range(1, 21)]
    symbol = _number(cfg, "symbol_period_ns", default=20.0, strict_min=0.0) * 1e-9
    dead = _number(cfg, "dead_time_ns", default=10.0, strict_min=0.0) * 1e-9
    corrupt = cfg.get("corrupt_mc_dead_time_ns")
    if corrupt is not None:
        corrupt = _number(cfg, "corrupt_mc_dead_time_ns", strict_min=0.0) * 1e-9
    trials = args.trials if args.trials is not None \
        else _integer(cfg, "trials", default=200_000)
    seed = args.seed if args.seed is not None else _integer(cfg, "seed", default=0, minimum=0)
    report = validate(rates, [g * 1e-9 for g in gates_ns], symbol, dead,
                      trials=trials, seed=seed, mc_dead_time=corrupt)
    print(report.format_table())
    return 0 if report.passed else 1


def _cmd_preset(args) -> int:
    scenarios = build_preset(args.name)
    for scenario in scenarios:
        if args.mode is not None:
            scenario = replace(scenario, mode=args.mode)
        run_scenario(scenario, out_dir=args.out, seed=args.seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spad-gate",
        description="Time-gated SPAD receiver model: count statistics, BER "
                    "prediction/optimization and Monte-Carlo validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="JSON scenario file")
        p.add_argument("--seed", type=int, default=None, help="override the MC seed")
        p.add_argument("--out", default=".", help="output directory for CSV files")

    p = sub.add_parser("stats", help="count moments vs gate-ON time")
    common(p)
    p.add_argument("--mode", choices=["analytic", "mc", "both"], default=None)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("ber", help="analytic BER sweep")
    common(p)
    p.add_argument("--mode", choices=["analytic", "mc", "both"], default=None)
    p.set_defaults(func=_cmd_ber)

    p = sub.add_parser("opt-tg", help="search the optimal gate-ON interval")
    common(p)
    p.set_defaults(func=_cmd_opt_tg)

    p = sub.add_parser("mc", help="Monte-Carlo BER of the exact receiver")
    common(p)
    p.add_argument("--trace", default=None, help="write a small event-trace CSV here")
    p.add_argument("--trace-symbols", type=int, default=50)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("validate", help="analytic vs MC moment cross-check")
    common(p, needs_config=False)
    p.add_argument("--trials", type=int, default=None, help="MC symbols per grid point")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("preset", help="run a canned scenario family")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--mode", choices=["analytic", "mc", "both"], default=None)
    p.set_defaults(func=_cmd_preset)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
