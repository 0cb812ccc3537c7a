"""
Composite NOT pulses under telegraph noise
==========================================

A plain pi pulse is the shortest NOT gate.  CORPSE and short CORPSE are
longer but cancel a static detuning to first order.  Which one wins depends
on how fast the noise moves compared with the gate.
"""

from rtnoise.experiments import default_tau_grid
from rtnoise.fidelity import fidelity_sweep
from rtnoise.pulses import composite_pulses

pulses = composite_pulses()
for name, p in pulses.items():
    print(f"{name:>12}: duration {p.duration:6.3f}, amplitudes {p.amplitudes}")

# %%
# Average gate fidelity against the noise correlation time
# ---------------------------------------------------------
# Fast noise favours the short pi pulse, because the composite sequences
# only add time to dephase in.  Slow noise looks static during the gate,
# so the first-order compensation of the composites pays off.
delta = 0.125
tau_cs = default_tau_grid(10)
rows = fidelity_sweep(pulses, delta, tau_cs)

print(f"\ndelta = {delta}")
print("   tau_c        pi       corpse   short_corpse")
for i, tau_c in enumerate(tau_cs):
    vals = [r["fidelity"] for r in rows[3 * i:3 * i + 3]]
    print(f"{tau_c:8.2f}  " + "  ".join(f"{v:.6f}" for v in vals))
