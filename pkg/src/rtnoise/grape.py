"""Gradient ascent on piecewise-constant controls for a noisy NOT gate.

The objective is the average gate fidelity of the RTN-averaged process,
propagated with the stacked conditional Bloch vectors.  Gradients are
exact: each segment derivative comes from the block-triangular exponential

    expm([[G dt, G_c dt], [0, G dt]]) = [[S, dS/da], [0, S]]

and forward/backward products accumulate them in one sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from . import operators as ops
from .classical_noise import RtnSpec, rtn_model
from .fidelity import fidelity_weights
from .pulses import ControlPulse, pi_pulse, short_corpse_not

SHORT_CORPSE_TIME = 7 * np.pi / 3


@dataclass(frozen=True)
class OptimizationConfig:
    delta: float
    tau_c: float
    n_segments: int = 64
    total_time: float = SHORT_CORPSE_TIME
    a_max: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-10
    patience: int = 10
    armijo: float = 1e-4
    max_backtracks: int = 40
    initial_amplitudes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be at least 1")
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")

    def initial_pulse(self) -> ControlPulse:
        if self.initial_amplitudes is None:
            # pi rotation spread evenly over the gate time
            amps = np.full(self.n_segments, min(np.pi / self.total_time, self.a_max))
        else:
            amps = np.clip(np.asarray(self.initial_amplitudes, dtype=float), -self.a_max, self.a_max)
            if amps.shape != (self.n_segments,):
                raise ValueError("initial amplitudes do not match n_segments")
        return ControlPulse.uniform(amps, self.total_time, self.a_max, "optimized")

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("delta", "tau_c", "n_segments", "total_time",
                                              "a_max", "max_iters", "tol", "patience")}
        if self.initial_amplitudes is not None:
            out["initial_amplitudes"] = [float(a) for a in self.initial_amplitudes]
        return out


@dataclass(frozen=True)
class OptimizationResult:
    pulse: ControlPulse
    fidelity: float
    iterations: int
    fidelity_history: np.ndarray
    converged: bool
    config: OptimizationConfig | None = None

    def to_json(self) -> dict:
        return {
            "config": None if self.config is None else self.config.to_json(),
            "pulse": self.pulse.to_json(),
            "fidelity": self.fidelity,
            "iterations": self.iterations,
            "converged": self.converged,
            "history": [float(f) for f in self.fidelity_history],
        }


def _cross_matrix(w) -> np.ndarray:
    """Matrix of ``r -> w x r``."""
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _bloch_axis(h: np.ndarray) -> np.ndarray:
    """Rotation vector ``w`` of ``H = w . sigma / 2`` (identity part dropped)."""
    return np.array([np.trace(ops.pauli(k) @ h).real for k in "XYZ"])


class FidelityObjective:
    """Average NOT-gate fidelity as a function of segment amplitudes.

    The conditional states are carried as Bloch vectors: with traceless
    dynamics the trace of each branch only follows the rate equation, so
    the unital block of the averaged map comes from a real
    ``3N x 3N`` generator ``blockdiag(w_k x) + kron(rates, I_3)``.
    """

    def __init__(self, delta: float, tau_c: float, durations, target=None,
                 coupling_axis=None):
        spec = RtnSpec(delta, tau_c) if coupling_axis is None else RtnSpec(delta, tau_c, coupling_axis)
        self.model = rtn_model(spec)
        if self.model.dim != 2:
            raise ValueError("gate optimization is implemented for a single qubit")
        self.durations = np.asarray(durations, dtype=float)
        n = self.model.n_states
        self.g0 = linalg.block_diag(*[_cross_matrix(_bloch_axis(self.model.hamiltonian(k, 0.0)))
                                      for k in range(n)])
        self.g0 += np.kron(self.model.rates, np.eye(3))
        self.gc = np.kron(np.eye(n), _cross_matrix(_bloch_axis(self.model.control)))
        self.split = np.kron(self.model.initial_distribution()[:, None], np.eye(3))
        target = ops.pauli("X") if target is None else target
        # Phi = 1/2 + sum(W * R) restricted to the Bloch block
        w = fidelity_weights(target)[1:, 1:]
        self.readout = w.T @ np.kron(np.ones((1, n)), np.eye(3))

    def _generators(self, a: np.ndarray) -> np.ndarray:
        return (self.g0[None] + a[:, None, None] * self.gc[None]) * self.durations[:, None, None]

    def fidelity(self, amplitudes) -> float:
        props = ops.expm_small_batch(self._generators(np.asarray(amplitudes, dtype=float)))
        f = self.split
        for s in props:
            f = s @ f
        return float(0.5 + np.trace(self.readout @ f))

    def fidelity_and_gradient(self, amplitudes) -> tuple[float, np.ndarray]:
        a = np.asarray(amplitudes, dtype=float)
        n = a.size
        m = self.g0.shape[0]
        aug = np.zeros((n, 2 * m, 2 * m))
        aug[:, :m, :m] = aug[:, m:, m:] = self._generators(a)
        aug[:, :m, m:] = self.gc[None] * self.durations[:, None, None]
        big = ops.expm_small_batch(aug)
        props, dprops = big[:, :m, :m], big[:, :m, m:]
        fwd = np.empty((n + 1,) + self.split.shape)
        back = np.empty((n + 1,) + self.readout.shape)
        fwd[0] = self.split
        back[n] = self.readout
        for j in range(n):
            np.matmul(props[j], fwd[j], out=fwd[j + 1])
            np.matmul(back[n - j], props[n - 1 - j], out=back[n - 1 - j])
        # d Phi / d a_j = Tr(back_{j+1} dS_j fwd_j)
        grad = np.einsum("nij,nji->n", back[1:], dprops @ fwd[:-1])
        return float(0.5 + np.trace(self.readout @ fwd[-1])), grad


def fidelity_gradient(pulse: ControlPulse, delta: float, tau_c: float,
                      target=None) -> np.ndarray:
    """Exact derivative of the gate fidelity with respect to each segment amplitude."""
    obj = FidelityObjective(delta, tau_c, pulse.durations, target)
    return obj.fidelity_and_gradient(pulse.amplitudes)[1]


def optimize_pulse(config: OptimizationConfig, target=None) -> OptimizationResult:
    """Projected gradient ascent with Barzilai-Borwein trial steps and backtracking.

    Every iterate is clipped to ``[-a_max, a_max]``; a trial is accepted only
    if it satisfies the Armijo condition along the projected step, so the
    recorded fidelity history never decreases.
    """
    start = config.initial_pulse()
    obj = FidelityObjective(config.delta, config.tau_c, start.durations, target)
    lo, hi = -config.a_max, config.a_max
    x = np.array(start.amplitudes)
    # the history records obj.fidelity, the same function the Armijo test
    # compares, so rounding in the augmented exponential cannot break monotonicity
    f = obj.fidelity(x)
    g = obj.fidelity_and_gradient(x)[1]
    history = [f]
    alpha = 1.0
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        accepted = False
        step = alpha
        for _ in range(config.max_backtracks):
            x_new = np.clip(x + step * g, lo, hi)
            s = x_new - x
            if not np.any(s):
                break
            f_new = obj.fidelity(x_new)
            if f_new >= f + config.armijo * float(g @ s):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        g_new = obj.fidelity_and_gradient(x_new)[1]
        y = g_new - g
        sy = float(s @ y)
        alpha = float(s @ s) / -sy if sy < 0 else 2.0 * step
        alpha = min(max(alpha, 1e-6), 1e6)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        if len(history) > config.patience and history[-1] - history[-1 - config.patience] < config.tol:
            converged = True
            break
    pulse = ControlPulse(start.durations, x, config.a_max, "optimized")
    return OptimizationResult(pulse, f, it, np.array(history), converged, config)


def optimize_with_restarts(config: OptimizationConfig, n_restarts: int = 5,
                           scale: float = 0.1, seed: int = 0,
                           target=None) -> tuple[OptimizationResult, list[OptimizationResult]]:
    """Best of the plain run and ``n_restarts`` randomly perturbed starts."""
    base = optimize_pulse(config, target)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    runs = [base]
    x0 = config.initial_pulse().amplitudes
    for _ in range(n_restarts):
        amps = np.clip(x0 + scale * config.a_max * rng.standard_normal(x0.size),
                       -config.a_max, config.a_max)
        runs.append(optimize_pulse(replace(config, initial_amplitudes=amps), target))
    best = max(runs, key=lambda r: r.fidelity)
    return best, runs


def initial_guesses(config: OptimizationConfig) -> dict[str, np.ndarray]:
    """Candidate starting pulses resampled onto the optimization grid."""
    T, n = config.total_time, config.n_segments
    out = {"stretched_pi": config.initial_pulse().amplitudes}
    for p in (pi_pulse(config.a_max), short_corpse_not(config.a_max)):
        if p.duration <= T + 1e-12:
            out[p.name] = p.resample(n, T).amplitudes
    return out
