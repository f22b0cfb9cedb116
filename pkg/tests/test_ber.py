import dataclasses
import math

import numpy as np
import pytest

from spadgate import (GateTiming, OpticalLink, RatePair, ber_gaussian,
                      decision_threshold, optimize_gate, photon_energy,
                      pixel_rates, q_function, sweep)
from spadgate.ber import GATE_AXIS, POWER_AXIS

FREE_64 = GateTiming.from_ns(20, 20, 10)


def _link(received_nw, background_nw, n=64, timing=FREE_64):
    return OpticalLink(785e-9, 0.18, received_nw * 1e-9, background_nw * 1e-9, n, timing)


def test_link_validation():
    with pytest.raises(ValueError):
        _link(-1.0, 7.0)
    with pytest.raises(ValueError):
        OpticalLink(785e-9, 0.0, 1e-9, 1e-9, 64, FREE_64)
    with pytest.raises(ValueError):
        OpticalLink(785e-9, 0.18, 1e-9, 1e-9, 0, FREE_64)
    with pytest.raises(ValueError):
        OpticalLink(0.0, 0.18, 1e-9, 1e-9, 64, FREE_64)
    with pytest.raises(ValueError):
        RatePair(2e8, 1e8)


def test_photon_energy():
    assert photon_energy(785e-9) == pytest.approx(2.5305e-19, rel=1e-4)


def test_pixel_rates_values():
    # quoted reference values carry 3 significant digits
    link = _link(8.0, 7.0)
    rates = pixel_rates(link)
    assert rates.rate1 == pytest.approx(2.555e8, rel=2e-3)
    assert rates.rate0 == pytest.approx(7.77e7, rel=2e-3)
    # the exact values per the rate formula with CODATA constants
    assert rates.rate1 == pytest.approx(2.5563e8, rel=1e-4)
    assert rates.rate0 == pytest.approx(7.7801e7, rel=1e-4)


def test_pixel_rates_zero_power():
    rates = pixel_rates(_link(0.0, 0.0))
    assert rates.rate0 == 0.0 and rates.rate1 == 0.0


def test_pixel_rates_scale_inversely_with_array():
    small = pixel_rates(_link(8.0, 7.0, n=64))
    large = pixel_rates(_link(8.0, 7.0, n=128))
    assert large.rate0 == pytest.approx(small.rate0 / 2.0, rel=1e-12)
    assert large.rate1 == pytest.approx(small.rate1 / 2.0, rel=1e-12)


def test_from_pixel_rates_round_trips():
    timing = GateTiming.from_ns(50, 50, 10)
    link = OpticalLink.from_pixel_rates(2e7, 7e7, 64, timing)
    rates = pixel_rates(link)
    assert rates.rate0 == pytest.approx(2e7, rel=1e-12)
    assert rates.rate1 == pytest.approx(7e7, rel=1e-12)


def test_q_function_convention():
    assert q_function(0.0) == 0.5
    assert q_function(3.0) == pytest.approx(1.3498980316300946e-3, rel=1e-10)
    assert q_function(9.0) < 1e-18  # stable deep into the tail


def test_ber_no_signal_is_half():
    assert ber_gaussian(_link(0.0, 7.0)) == 0.5


def test_ber_degenerate_spread():
    # no photons at all: both counts are surely zero
    assert ber_gaussian(_link(0.0, 0.0)) == 0.5
    # signal but no background at a tiny gate: sigma0 = 0 yet means separate
    link = _link(5.0, 0.0, timing=GateTiming.from_ns(20, 20, 10))
    assert ber_gaussian(link, 5e-9) < 0.5


def test_ber_decreases_with_array_size_at_fixed_pixel_rates():
    timing = GateTiming.from_ns(20, 20, 10)
    values = []
    for n in (16, 64, 256):
        link = OpticalLink.from_pixel_rates(3e7, 1.2e8, n, timing)
        values.append(ber_gaussian(link, 10e-9))
    assert values[0] > values[1] > values[2]


def test_ber_value_at_benchmark_point():
    # frozen from an independent scipy.integrate.quad evaluation of the model
    assert ber_gaussian(_link(8.0, 7.0), 10e-9) == pytest.approx(3.3398e-5, rel=1e-3)


def test_free_running_ber_non_monotone_in_power():
    # past the dead-time throughput peak more signal hurts: the free-running
    # BER curve over power has an interior minimum
    powers = [1, 2, 3, 4, 5, 6, 8]
    values = [ber_gaussian(_link(p, 3.0)) for p in powers]
    best = values.index(min(values))
    assert 0 < best < len(values) - 1
    assert values[-1] > min(values)
    assert values[0] > min(values)


def test_optimize_tie_breaks_toward_larger_gate():
    # zero signal: BER is exactly 0.5 on the whole grid, the tie goes high
    link = _link(0.0, 5.0)
    gate, value = optimize_gate(link, grid_step=1e-9)
    assert gate == pytest.approx(20e-9, abs=1e-15)
    assert value == 0.5


def test_optimize_rejects_bad_step():
    with pytest.raises(ValueError):
        optimize_gate(_link(8.0, 7.0), grid_step=0.0)


def test_optimize_never_loses_to_free_running():
    for received in (2.0, 8.0, 15.0):
        link = _link(received, 7.0)
        _, best = optimize_gate(link, grid_step=0.2e-9)
        assert best <= ber_gaussian(link, link.timing.symbol_period) + 1e-18


def test_optimize_refinement_stays_close_to_grid():
    link = _link(15.0, 7.0)
    coarse_gate, coarse = optimize_gate(link, grid_step=0.1e-9)
    fine_gate, fine = optimize_gate(link, grid_step=0.1e-9, refine=True)
    assert fine <= coarse
    assert abs(fine_gate - coarse_gate) <= 0.1e-9


def test_sweep_empty():
    assert sweep(_link(8.0, 7.0), GATE_AXIS, []) == []


def test_sweep_validation():
    link = _link(8.0, 7.0)
    with pytest.raises(ValueError):
        sweep(link, "nonsense", [1e-9])
    with pytest.raises(ValueError):
        sweep(link, GATE_AXIS, [2e-9, 1e-9])
    with pytest.raises(ValueError):
        sweep(link, GATE_AXIS, [0.0, 1e-9])


def test_sweep_gate_axis_rows():
    link = _link(8.0, 7.0)
    points = sweep(link, GATE_AXIS, [6e-9, 10e-9])
    assert [p.axis_value for p in points] == [6e-9, 10e-9]
    for p in points:
        assert p.gate_on == p.axis_value
        assert p.tg_star is None
        assert p.ber_analytic == pytest.approx(ber_gaussian(link, p.gate_on), rel=1e-12)
        assert p.u1 > p.u0


def test_sweep_power_axis_with_optimization():
    link = _link(1.0, 7.0)
    points = sweep(link, POWER_AXIS, [8e-9, 15e-9], optimize=True, grid_step=0.1e-9)
    assert all(p.tg_star is not None for p in points)
    assert points[0].tg_star >= points[1].tg_star  # stronger signal gates harder
    reference = optimize_gate(dataclasses.replace(link, received_power=15e-9),
                              grid_step=0.1e-9)
    assert points[1].gate_on == pytest.approx(reference[0], abs=1e-15)


def test_sweep_order_independent_of_worker_count(monkeypatch):
    link = _link(1.0, 3.0)
    values = [2e-9, 4e-9, 8e-9, 16e-9]
    monkeypatch.setenv("SPAD_GATE_THREADS", "1")
    serial = sweep(link, GATE_AXIS, values)
    monkeypatch.setenv("SPAD_GATE_THREADS", "4")
    threaded = sweep(link, GATE_AXIS, values)
    assert serial == threaded


def test_threads_env_validation(monkeypatch):
    from spadgate.ber import thread_count
    monkeypatch.setenv("SPAD_GATE_THREADS", "junk")
    with pytest.raises(ValueError):
        thread_count()


def test_decision_threshold_between_means():
    link = _link(4.0, 3.0)
    from spadgate import bit_moments
    stats0, stats1 = bit_moments(link)
    threshold = decision_threshold(link)
    assert link.array_size * stats0.mean < threshold < link.array_size * stats1.mean
