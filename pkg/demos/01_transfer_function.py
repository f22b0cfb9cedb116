"""Throughput of a passively quenched pixel: the classic dead-time rolloff.

A paralyzable detector restarts its dead time on every arrival, so pushing
more light eventually *reduces* the detected rate: the throughput peaks at an
incident rate of 1/dead_time and decays as rate*exp(-rate*dead_time).  This
script draws the curve and drops Monte-Carlo markers on it from long
free-running runs of the event simulator.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spadgate import GateTiming, estimate_moments_mc, transfer_rate

DEAD_TIME = 10e-9
OUT = "demos/output"

rates = np.logspace(6.5, 9.3, 200)
curve = np.array([transfer_rate(r, DEAD_TIME) for r in rates])

# MC markers: slice a long constant-rate free-running run into symbols and
# divide the mean count by the slice length
timing = GateTiming.from_ns(20, 20, 10)
mc_rates = np.array([0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]) / DEAD_TIME
mc_detected = []
for i, rate in enumerate(mc_rates):
    moments = estimate_moments_mc(rate, timing, 100_000, rng_seed=100 + i)
    mc_detected.append(moments.mean / timing.symbol_period)
    print(f"incident {rate:.3g} Hz -> detected {mc_detected[-1]:.4g} Hz "
          f"(closed form {transfer_rate(rate, DEAD_TIME):.4g} Hz)")

peak = 1.0 / DEAD_TIME
print(f"\npeak throughput {transfer_rate(peak, DEAD_TIME):.4g} Hz "
      f"= 1/(e*dead_time) at incident rate 1/dead_time = {peak:.3g} Hz")

fig, ax = plt.subplots(figsize=(6, 4))
ax.loglog(rates, curve, label="rate * exp(-rate * dead_time)")
ax.loglog(mc_rates, mc_detected, "o", label="Monte-Carlo")
ax.axvline(peak, color="gray", ls=":", lw=1)
ax.set_xlabel("incident photon rate (Hz)")
ax.set_ylabel("detected photon rate (Hz)")
ax.set_title("Paralyzable dead time: throughput rolls over at 1/dead_time")
ax.legend()
fig.tight_layout()

import os

os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/transfer_function.png", dpi=150)
print(f"wrote {OUT}/transfer_function.png")
