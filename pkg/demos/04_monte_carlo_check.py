"""
Sampling noise histories directly
=================================

The deterministic solvers claim to give the exact average over all noise
histories.  Sampling the histories and evolving each one unitarily checks
that claim, with honest error bars.
"""

import numpy as np

from rtnoise import operators as ops
from rtnoise.classical_noise import RtnSpec, rtn_model
from rtnoise.ensemble import evolve_average
from rtnoise.fidelity import gate_fidelity
from rtnoise.montecarlo import mc_gate_fidelity, mc_average_evolution
from rtnoise.pulses import composite_pulses

pulse = composite_pulses()["short_corpse"]
rho0 = ops.from_bloch([0.0, 0.0, 1.0])
delta, tau_c = 0.25, 5.0
model = rtn_model(RtnSpec(delta, tau_c))

exact_state = evolve_average(rho0, model, pulse.duration, pulse)
exact_phi = gate_fidelity(pulse, delta, tau_c)
print(f"deterministic Phi = {exact_phi:.6f}")

# %%
# Error bars shrink as 1/sqrt(n)
# ------------------------------
for n in (1_000, 10_000, 100_000):
    phi, err = mc_gate_fidelity(model, pulse, ops.pauli("X"), n, seed=2024)
    est = mc_average_evolution(model, rho0, pulse, n, seed=2024)
    dev = np.max(np.abs(est.mean_state - exact_state))
    print(f"n = {n:>7}: Phi = {phi:.6f} +- {err:.1e} ({(phi - exact_phi) / err:+.2f} sigma), "
          f"state deviation {dev:.1e} vs standard error {est.std_error:.1e}")
