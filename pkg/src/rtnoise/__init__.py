"""Average qubit dynamics under classical telegraph noise and its quantum
equivalents, with pulse optimization for noisy NOT gates."""

__version__ = "0.1.0"

from .operators import (anticommutator, bloch, commutator, expm, from_bloch, pauli,
                        trace_distance)
from .classical_noise import (MarkovNoiseModel, NoiseTrajectory, RtnSpec, rtn_model,
                              sample_trajectory, stationary_distribution, two_state_model)
from .ensemble import (ConditionalEnsemble, average_state, evolve_average, evolve_ensemble,
                       init_ensemble)
from .born import (CorrelationKernel, MemoryState, evolve_born_exponential,
                   evolve_born_general, split_conditional)
from .defect import (BlockState, DefectModel, detailed_balance_rates, evolve_defect_blocks,
                     evolve_defect_full, offdiag_block_dynamics)
from .pulses import ControlPulse, corpse_not, pi_pulse, short_corpse_not
from .fidelity import ProcessMap, average_gate_fidelity, fidelity_sweep, process_map
from .grape import (OptimizationConfig, OptimizationResult, fidelity_gradient,
                    optimize_pulse)
from .montecarlo import McEstimate, mc_average_evolution, mc_gate_fidelity
