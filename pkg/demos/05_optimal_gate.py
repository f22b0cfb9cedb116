"""How the optimal gate-ON interval moves with signal and background power.

Two regimes, one rule: gate harder when traffic grows.  More signal power
means more dead-time blocking, so the optimizer trades signal for ISI relief
and shortens the gate; more background pushes the same way because a narrow
gate rejects background counts.  At low power the optimum is the full symbol
(free running beats gating when photons are scarce).

The 1024-pixel receiver runs at 200 Mbps where the symbol is *half* the dead
time; there the ISI can only be tamed, never removed, and the optimal gate
settles near a couple of nanoseconds.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spadgate import GateTiming, OpticalLink, optimize_gate

OUT = "demos/output"
GRID_STEP = 0.05e-9


def tg_star_curve(array, symbol_ns, background_nw, powers_nw):
    timing = GateTiming.from_ns(symbol_ns, symbol_ns, 10)
    out = []
    for p in powers_nw:
        link = OpticalLink(785e-9, 0.18, p * 1e-9, background_nw * 1e-9, array, timing)
        out.append(optimize_gate(link, GRID_STEP)[0])
    return np.array(out)


fig, axes = plt.subplots(1, 2, figsize=(10, 4))

powers64 = np.arange(1, 13)
for pb in (0.5, 1.5, 3.0):
    curve = tg_star_curve(64, 20, pb, powers64)
    axes[0].plot(powers64, curve * 1e9, "o-", ms=3, label=f"{pb} nW background")
    print(f"64 px, background {pb} nW: Tg* from {curve[0] * 1e9:.2f} ns "
          f"at 1 nW down to {curve[-1] * 1e9:.2f} ns at 12 nW")
axes[0].set_title("64 pixels, 50 Mbps")

powers1024 = np.arange(20, 75, 5)
for pb in (40.0, 80.0):
    curve = tg_star_curve(1024, 5, pb, powers1024)
    axes[1].plot(powers1024, curve * 1e9, "o-", ms=3, label=f"{pb} nW background")
axes[1].set_title("1024 pixels, 200 Mbps (sub-dead-time)")

for ax in axes:
    ax.set_xlabel("average signal power (nW)")
    ax.set_ylabel("optimal gate-ON time (ns)")
    ax.legend()
fig.tight_layout()

os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/optimal_gate.png", dpi=150)
print(f"wrote {OUT}/optimal_gate.png")
