"""Time-gated SPAD photon-counting receiver model.

Closed-form per-symbol count statistics of a passively quenched, time-gated
SPAD pixel, Gaussian OOK BER prediction with gate-ON optimization, and an
exact event-level Monte-Carlo simulator of the receiver that serves as the
oracle for everything analytic.
"""

from .gating import GateTiming, gate_overlap
from .quadrature import (QuadratureError, breakpoints_of_gate_overlap,
                         integrate_piecewise)
from .photon_stats import (ConsistencyError, CountStats, corr_adjacent,
                           corr_first_adjacent, corr_first_nonadjacent,
                           corr_nonadjacent, count_stats, mean_count,
                           second_moment, segment_pair_expansion,
                           transfer_rate, variance)
from .ber import (BerPoint, OpticalLink, RatePair, ber_gaussian, bit_moments,
                  decision_threshold, optimize_gate, photon_energy,
                  pixel_rates, q_function, sweep)
from .mc import (DetectionRecord, McBer, McMoments, Pmf, apply_gated_dead_time,
                 estimate_ber_mc, estimate_moments_mc, estimate_pmf,
                 gaussian_count_pmf, gen_arrivals, sample_symbol_counts,
                 simulate_frame, write_event_trace)
from .presets import PRESETS, McSettings, Scenario, build_preset
from .harness import ValidationReport, run_scenario, run_scenarios, validate

__version__ = "0.1.0"

__all__ = [
    "GateTiming", "gate_overlap",
    "QuadratureError", "breakpoints_of_gate_overlap", "integrate_piecewise",
    "ConsistencyError", "CountStats", "corr_adjacent", "corr_first_adjacent",
    "corr_first_nonadjacent", "corr_nonadjacent", "count_stats", "mean_count",
    "second_moment", "segment_pair_expansion", "transfer_rate", "variance",
    "BerPoint", "OpticalLink", "RatePair", "ber_gaussian", "bit_moments",
    "decision_threshold", "optimize_gate", "photon_energy", "pixel_rates",
    "q_function", "sweep",
    "DetectionRecord", "McBer", "McMoments", "Pmf", "apply_gated_dead_time",
    "estimate_ber_mc", "estimate_moments_mc", "estimate_pmf",
    "gaussian_count_pmf", "gen_arrivals", "sample_symbol_counts",
    "simulate_frame", "write_event_trace",
    "PRESETS", "McSettings", "Scenario", "build_preset",
    "ValidationReport", "run_scenario", "run_scenarios", "validate",
]
