"""Event-level Monte-Carlo of the gated SPAD array: the exact receiver.

Per pixel, photon arrivals are Poisson with the bit-dependent rate; an
arrival inside a gate window is detected iff no other gate-ON arrival
occurred within the preceding dead time (passive quenching: every gate-ON
arrival, detected or not, re-arms the paralysis clock).  Arrivals in gate-OFF
periods trigger no avalanche and leave the detector state untouched, so the
fast paths below never generate them; :func:`apply_gated_dead_time` is the
reference rule on full arrival streams.

Everything is a deterministic function of (seed, parameters): the bit stream
and every pixel draw from dedicated counter-based Philox substreams, so
results do not depend on evaluation order or parallelism.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .ber import (OpticalLink, ber_gaussian, bit_moments, decision_threshold,
                  pixel_rates)
from .gating import GateTiming, gate_phase, warmup_floor
from .quadrature import DEFAULT_REL_TOL

DEFAULT_WARMUP = 10
_WILSON_Z = 1.959963984540054  # 95% two-sided normal quantile
_CHUNK_ARRIVALS = 4_000_000    # arrival-generation granularity
_MAX_CHUNK_SYMBOLS = 1 << 22   # keeps in-chunk times small for full precision


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(_seed_sequence(seed)))


@dataclass(frozen=True)
class DetectionRecord:
    """Incident and detected arrival times of one pixel (detected subset)."""

    incident_times: np.ndarray
    detected_times: np.ndarray

    def __post_init__(self) -> None:
        for name, t in (("incident_times", self.incident_times),
                        ("detected_times", self.detected_times)):
            arr = np.asarray(t, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if arr.size > 1 and np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class Pmf:
    """Empirical probability mass function on nonnegative integer counts."""

    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.support)
        p = np.asarray(self.probabilities, dtype=float)
        if s.shape != p.shape or s.ndim != 1:
            raise ValueError("support and probabilities must be 1-d and match")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1 within 1e-12, got {total}")

    def mean(self) -> float:
        return float(np.dot(self.support, self.probabilities))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.support - m) ** 2, self.probabilities))


@dataclass(frozen=True)
class McMoments:
    """Replicated moment estimates of the per-symbol count with standard errors."""

    mean: float
    second_moment: float
    variance: float
    se_mean: float
    se_variance: float
    n_symbols: int
    n_reps: int


@dataclass(frozen=True)
class McBer:
    """Monte-Carlo BER estimate with a 95% Wilson interval half-width.

    ``upper_bounded`` flags runs that collected fewer errors than the target,
    so the estimate is best read as an upper bound.
    """

    ber: float
    halfwidth: float
    n_bits: int
    n_errors: int
    threshold: float
    upper_bounded: bool


def gen_arrivals(rate: float, duration: float, rng_seed) -> np.ndarray:
    """Homogeneous Poisson arrival times on ``[0, duration)`` from cumulative
    exponential inter-arrival gaps."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if rate == 0.0 or duration == 0.0:
        return np.empty(0)
    rng = _generator(rng_seed)
    expected = rate * duration
    block = int(expected + 10.0 * math.sqrt(expected) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / rate, size=block))
    while times.size == 0 or times[-1] < duration:
        extra = np.cumsum(rng.exponential(1.0 / rate, size=block)) + (times[-1] if times.size else 0.0)
        times = np.concatenate([times, extra])
    return times[times < duration]


def apply_gated_dead_time(incident_times, timing: GateTiming) -> DetectionRecord:
    """Reference detection rule on a full (gate-OFF included) arrival stream.

    An arrival is detected iff it falls inside a gate window and the previous
    gate-ON arrival lies at least one dead time in the past.  Gate-OFF
    arrivals are inert.
    """
    t = np.asarray(incident_times, dtype=float)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("incident times must be strictly increasing")
    on = gate_phase(t, timing) < timing.gate_on
    t_on = t[on]
    if t_on.size == 0:
        return DetectionRecord(t, t_on)
    previous = np.empty_like(t_on)
    previous[0] = -math.inf
    previous[1:] = t_on[:-1]
    detected = (t_on - previous) >= timing.dead_time
    return DetectionRecord(t, t_on[detected])


def _count_symbols(rng: np.random.Generator, rates: np.ndarray, timing: GateTiming,
                   carry: float = -math.inf) -> tuple[np.ndarray, float]:
    """Detected count per symbol for one pixel.

    ``rates[k]`` is the incident rate during symbol k; arrivals are generated
    in the gate windows only.  ``carry`` is the time of the last gate-ON
    arrival relative to the start of this stretch (or -inf); the returned
    carry is relative to its end, so streams can be chained exactly.
    """
    ts, tg, td = timing.symbol_period, timing.gate_on, timing.dead_time
    n_symbols = rates.size
    counts = np.zeros(n_symbols, dtype=np.int64)
    per_symbol = max(float(rates.max(initial=0.0)) * tg, 1e-12)
    chunk = min(max(1024, int(_CHUNK_ARRIVALS / per_symbol)), _MAX_CHUNK_SYMBOLS)
    start = 0
    while start < n_symbols:
        stop = min(n_symbols, start + chunk)
        n = rng.poisson(rates[start:stop] * tg)
        total = int(n.sum())
        if total:
            offsets = rng.random(total) * tg
            sym = np.repeat(np.arange(stop - start, dtype=np.int64), n)
            order = np.lexsort((offsets, sym))
            offsets = offsets[order]
            sym = sym[order]
            t = sym * ts + offsets
            previous = np.empty_like(t)
            previous[0] = carry
            previous[1:] = t[:-1]
            detected = (t - previous) >= td
            counts[start:stop] = np.bincount(sym[detected], minlength=stop - start)
            carry = float(t[-1])
        carry -= (stop - start) * ts
        start = stop
    return counts, carry


def sample_symbol_counts(rate: float, timing: GateTiming, n_symbols: int, rng_seed,
                         warmup: int = DEFAULT_WARMUP) -> np.ndarray:
    """Per-symbol detected counts of one pixel under a constant incident rate,
    after discarding enough warm-up symbols to reach the stationary ISI state."""
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    warm = max(warmup, warmup_floor(timing))
    rates = np.full(warm + int(n_symbols), float(rate))
    counts, _ = _count_symbols(_generator(rng_seed), rates, timing)
    return counts[warm:]


def simulate_frame(link: OpticalLink, gate_on: float, bits, warmup: int = DEFAULT_WARMUP,
                   rng_seed=0) -> np.ndarray:
    """Array count per symbol for a given transmitted bit stream.

    Every pixel sees an independent Poisson stream switching between the two
    per-pixel OOK rates at symbol boundaries; dead-time state runs
    continuously across boundaries.  ``warmup`` uniformly random symbols are
    prepended and their counts discarded.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("bits must contain only 0 and 1")
    timing = link.timing.with_gate_on(gate_on)
    warm = max(warmup, warmup_floor(timing))
    children = _seed_sequence(rng_seed).spawn(link.array_size + 1)
    warm_bits = _generator(children[0]).integers(0, 2, size=warm)
    rp = pixel_rates(link)
    rates = np.where(np.concatenate([warm_bits, bits]) == 1, rp.rate1, rp.rate0)
    total = np.zeros(rates.size, dtype=np.int64)
    for child in children[1:]:
        counts, _ = _count_symbols(_generator(child), rates, timing)
        total += counts
    return total[warm:]


def _wilson_halfwidth(errors: int, n: int) -> float:
    z = _WILSON_Z
    phat = errors / n
    denom = 1.0 + z * z / n
    return z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom


def estimate_ber_mc(link: OpticalLink, gate_on: float | None, n_bits: int, rng_seed,
                    *, threshold: float | None = None, warmup: int = DEFAULT_WARMUP,
                    auto_scale: bool = True, target_errors: int = 100,
                    max_bits: int = 10**9, rel_tol: float = DEFAULT_REL_TOL) -> McBer:
    """Monte-Carlo BER of the exact receiver on random equiprobable bits.

    A symbol decodes as '1' iff the array count reaches the decision
    threshold (by default the Gaussian-model threshold at this gate
    interval; pass ``threshold`` for a fixed override).  When ``auto_scale``
    is set, ``n_bits`` grows toward ``target_errors`` expected errors using
    the analytic BER as the prior, capped at ``max_bits``.
    """
    if n_bits < 10**4:
        raise ValueError(f"n_bits must be at least 1e4, got {n_bits}")
    gate = link.timing.gate_on if gate_on is None else float(gate_on)
    timing = link.timing.with_gate_on(gate)
    if threshold is None:
        threshold = decision_threshold(link, gate, rel_tol)
    n_used = int(n_bits)
    if auto_scale:
        hint = ber_gaussian(link, gate, rel_tol)
        needed = target_errors / max(hint, 1e-300)
        n_used = int(min(float(max_bits), max(float(n_bits), math.ceil(needed))))

    warm = max(warmup, warmup_floor(timing))
    children = _seed_sequence(rng_seed).spawn(link.array_size + 1)
    bit_rng = _generator(children[0])
    pixel_rngs = [_generator(child) for child in children[1:]]
    carries = np.full(link.array_size, -math.inf)
    rp = pixel_rates(link)

    per_block_arrivals = link.array_size * max(rp.rate1 * gate, 1e-12)
    block = min(max(4096, int(8e6 / per_block_arrivals)), 1 << 20)

    errors = 0
    done = 0
    first = True
    while done < n_used:
        size = min(block, n_used - done)
        data_bits = bit_rng.integers(0, 2, size=size)
        if first:
            warm_bits = bit_rng.integers(0, 2, size=warm)
            block_bits = np.concatenate([warm_bits, data_bits])
        else:
            block_bits = data_bits
        rates = np.where(block_bits == 1, rp.rate1, rp.rate0)
        total = np.zeros(rates.size, dtype=np.int64)
        for px in range(link.array_size):
            counts, carries[px] = _count_symbols(pixel_rngs[px], rates, timing, carries[px])
            total += counts
        if first:
            total = total[warm:]
            first = False
        errors += int(np.sum((total >= threshold) != (data_bits == 1)))
        done += size

    return McBer(
        ber=errors / n_used,
        halfwidth=_wilson_halfwidth(errors, n_used),
        n_bits=n_used,
        n_errors=errors,
        threshold=float(threshold),
        upper_bounded=errors < target_errors,
    )


def estimate_pmf(link: OpticalLink, gate_on: float | None, bit: int, n_trials: int,
                 rng_seed, warmup: int = DEFAULT_WARMUP) -> Pmf:
    """Empirical PMF of the array count for symbols carrying ``bit``, embedded
    in a random equiprobable stream (the exact conditional distribution,
    ISI from the random history included)."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    if n_trials < 10**5:
        raise ValueError(f"n_trials must be at least 1e5, got {n_trials}")
    gate = link.timing.gate_on if gate_on is None else float(gate_on)
    root = _seed_sequence(rng_seed)
    bits_ss, frame_ss = root.spawn(2)
    n_symbols = int(2.2 * n_trials) + 1024
    bits = _generator(bits_ss).integers(0, 2, size=n_symbols)
    counts = simulate_frame(link, gate, bits, warmup=warmup, rng_seed=frame_ss)
    matching = counts[bits == bit]
    if matching.size < n_trials:
        raise RuntimeError(
            f"only {matching.size} symbols carried bit {bit}; wanted {n_trials}")
    matching = matching[:n_trials]
    freq = np.bincount(matching)
    return Pmf(np.arange(freq.size), freq / n_trials)


def gaussian_count_pmf(link: OpticalLink, gate_on: float | None, bit: int,
                       support, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Gaussian-model counterpart of :func:`estimate_pmf`: the analytic
    normal approximation of the array count discretized on ``support``."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    stats = bit_moments(link, gate_on, rel_tol)[bit]
    n = link.array_size
    mean = n * stats.mean
    std = math.sqrt(n * stats.variance)
    k = np.asarray(support, dtype=float)
    if std == 0.0:
        return (np.abs(k - mean) < 0.5).astype(float)
    return ndtr((k + 0.5 - mean) / std) - ndtr((k - 0.5 - mean) / std)


def estimate_moments_mc(rate: float, timing: GateTiming, n_trials: int, rng_seed,
                        *, n_reps: int = 50, warmup: int = DEFAULT_WARMUP) -> McMoments:
    """Sample mean/variance of the per-symbol count under a constant rate.

    ``n_reps`` independent substreams each contribute ``n_trials // n_reps``
    post-warm-up symbols; standard errors come from the spread of the
    per-replication estimates, which makes them valid also in the
    ISI-correlated regime.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if n_trials < 10**5:
        raise ValueError(f"n_trials must be at least 1e5, got {n_trials}")
    if n_reps < 2:
        raise ValueError(f"n_reps must be at least 2, got {n_reps}")
    per = n_trials // n_reps
    warm = max(warmup, warmup_floor(timing))
    means = np.empty(n_reps)
    seconds = np.empty(n_reps)
    for i, child in enumerate(_seed_sequence(rng_seed).spawn(n_reps)):
        rates = np.full(warm + per, float(rate))
        counts, _ = _count_symbols(_generator(child), rates, timing)
        counts = counts[warm:]
        means[i] = counts.mean()
        seconds[i] = np.mean(counts.astype(float) ** 2)
    # Bessel-corrected per-replication variances
    variances = (seconds - means**2) * (per / (per - 1.0))
    return McMoments(
        mean=float(means.mean()),
        second_moment=float(seconds.mean()),
        variance=float(variances.mean()),
        se_mean=float(means.std(ddof=1) / math.sqrt(n_reps)),
        se_variance=float(variances.std(ddof=1) / math.sqrt(n_reps)),
        n_symbols=per * n_reps,
        n_reps=n_reps,
    )


def write_event_trace(path, records) -> None:
    """Dump per-pixel arrival traces as CSV rows ``pixel,time_s,event`` where
    ``event`` marks each incident arrival as detected or merely incident.
    Meant for debugging small runs."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pixel", "time_s", "event"])
        for pixel, record in enumerate(records):
            detected = np.isin(record.incident_times, record.detected_times)
            for t, hit in zip(record.incident_times, detected):
                writer.writerow([pixel, repr(float(t)), "detected" if hit else "incident"])
