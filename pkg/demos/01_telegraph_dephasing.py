"""
Dephasing by random telegraph noise, three ways
================================================

A qubit whose splitting jumps between +delta and -delta at random dephases.
The average over noise histories can be computed from the conditional
ensemble equations, from a second-order memory-kernel equation, or from a
two-level defect coupled to the qubit.  All three give the same answer.
"""

import numpy as np

from rtnoise import operators as ops
from rtnoise.born import CorrelationKernel, born_exponential_trajectory
from rtnoise.classical_noise import RtnSpec, rtn_model
from rtnoise.defect import DefectModel, evolve_defect_blocks
from rtnoise.ensemble import ensemble_trajectory

# Start on the equator of the Bloch sphere, with no control field.
rho0 = ops.from_bloch([1.0, 0.0, 0.0])
times = np.linspace(0.0, 40.0, 9)

# %%
# Slow and fast noise
# -------------------
# With the same amplitude, fast switching (small tau_c) averages out and the
# coherence survives longer.  That is motional narrowing.
delta = 0.25
for tau_c in (0.5, 50.0):
    states = ensemble_trajectory(rho0, rtn_model(RtnSpec(delta, tau_c)), times)
    coherence = 2 * np.abs(states[:, 0, 1])
    print(f"tau_c = {tau_c:5.1f}:", " ".join(f"{c:.3f}" for c in coherence))

# %%
# The same evolution from the memory kernel and from the defect
# --------------------------------------------------------------
# The kernel has strength g = delta and decays as exp(-2 u / tau_c).  The
# defect flips with rate 1/tau_c in both directions (a hot bath).
tau_c = 5.0
k = ops.pauli("Z") / 2
zeros = np.zeros((2, 2))
ens = ensemble_trajectory(rho0, rtn_model(RtnSpec(delta, tau_c)), times)
born = born_exponential_trajectory(zeros, k, CorrelationKernel.exponential(delta, tau_c),
                                   rho0, times)
defect = DefectModel(zeros, delta * k, 0.0, 1 / tau_c, 1 / tau_c)

print("\n   t    ensemble-kernel   ensemble-defect")
for t, r_ens, m in zip(times, ens, born):
    r_def = evolve_defect_blocks(defect, rho0, t).system
    print(f"{t:5.1f}   {ops.trace_distance(r_ens, m.rho):.1e}          "
          f"{ops.trace_distance(r_ens, r_def):.1e}")
