"""BER versus the gate-ON interval: the ISI cliff.

Widening the gate first helps (more signal photons) and then hurts: beyond
gate_on = symbol_period - dead_time the OFF tail no longer swallows the dead
time, avalanches leak into the next symbol's gate, and the BER jumps.  With
strong signal the best gate is narrower still, because extra width mostly
admits background.  The minimum of each curve is the receiver's operating
point.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spadgate import GateTiming, OpticalLink, sweep
from spadgate.ber import GATE_AXIS

OUT = "demos/output"

timing = GateTiming.from_ns(20, 20, 10)
gates = np.linspace(0.2, 20.0, 199) * 1e-9

fig, ax = plt.subplots(figsize=(7, 4.5))
for received_nw in (8, 10, 12, 15):
    link = OpticalLink(785e-9, 0.18, received_nw * 1e-9, 7e-9, 64, timing)
    points = sweep(link, GATE_AXIS, gates)
    ber = np.array([p.ber_analytic for p in points])
    best = int(np.argmin(ber))
    ax.semilogy(gates * 1e9, ber, label=f"{received_nw} nW")
    ax.plot(gates[best] * 1e9, ber[best], "k*", ms=8)
    print(f"signal {received_nw:2d} nW: best gate {gates[best] * 1e9:5.1f} ns, "
          f"BER {ber[best]:.3g}")

ax.axvline(10, color="gray", ls=":", lw=1)
ax.text(10.15, 0.3, "OFF tail = dead time", rotation=90, fontsize=8, color="gray")
ax.set_xlabel("gate-ON time (ns)")
ax.set_ylabel("analytic BER")
ax.set_ylim(1e-10, 1)
ax.set_title("64-pixel array, 50 Mbps, 7 nW background")
ax.legend(title="avg signal power")
fig.tight_layout()

os.makedirs(OUT, exist_ok=True)
fig.savefig(f"{OUT}/ber_vs_gate.png", dpi=150)
print(f"wrote {OUT}/ber_vs_gate.png")
