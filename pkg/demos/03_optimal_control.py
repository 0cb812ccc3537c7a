"""
Gradient-optimized NOT pulses
=============================

Gradient ascent on a 64-segment control, bounded by |a| <= a_max, finds
pulses that beat every composite sequence.  For moderately fast noise the
optimum is essentially a pi pulse.  For slow noise it grows sign-alternating
lobes, much like short CORPSE.
"""

from rtnoise.experiments import optimize_gate
from rtnoise.fidelity import gate_fidelity
from rtnoise.pulses import composite_pulses

delta = 0.125
pulses = composite_pulses()

for tau_c in (5.0, 50.0):
    res = optimize_gate(delta, tau_c)
    best_name, best = max(((n, gate_fidelity(p, delta, tau_c)) for n, p in pulses.items()),
                          key=lambda x: x[1])
    print(f"\ntau_c = {tau_c}: optimized Phi = {res.fidelity:.8f} "
          f"(best composite {best_name} {best:.8f})")
    print(f"  gate time {res.config.total_time:.3f}, {res.pulse.sign_changes()} sign changes")
    # a coarse text picture of a(t): one character per segment
    bars = "".join("+" if a > 0.5 else "-" if a < -0.5 else "." for a in res.pulse.amplitudes)
    print("  " + bars)
    for sign, area in res.pulse.lobes():
        print(f"    lobe {'+' if sign > 0 else '-'}, rotation angle {abs(area):.3f}")
