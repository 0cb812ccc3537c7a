"""Monte Carlo average over sampled noise histories.

Each trajectory evolves unitarily with the Hamiltonian of its current noise
state; the evolution is exact between events (noise switches and control
segment edges) via the eigendecomposition of each constant Hamiltonian.
Trajectories are processed in fixed blocks, each with its own counter-based
random stream keyed by ``(seed, block index)``, and reduced in block order,
so results depend only on ``seed``, ``n_traj`` and ``block_size``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .classical_noise import MarkovNoiseModel, trajectory_rng
from .pulses import ControlPulse

BLOCK_SIZE = 4096
N_BATCHES = 10


@dataclass(frozen=True)
class McEstimate:
    mean_state: np.ndarray
    std_error: float
    n_traj: int
    entry_std_error: np.ndarray | None = None


def _block_unitaries(model: MarkovNoiseModel, pulse: ControlPulse, T: float,
                     size: int, seed: int, block: int) -> np.ndarray:
    rng = trajectory_rng(seed, block)
    n, d = model.n_states, model.dim
    state = rng.choice(n, size=size, p=model.initial_distribution())
    exit_rates = model.exit_rates()
    jumps = np.array(model.rates, dtype=float)
    np.fill_diagonal(jumps, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cum = np.cumsum(jumps / jumps.sum(axis=0, keepdims=True), axis=0)

    def waiting(states):
        lam = exit_rates[states]
        out = np.full(states.shape, np.inf)
        live = lam > 0
        out[live] = rng.exponential(1.0, size=int(live.sum())) / lam[live]
        return out

    u = np.broadcast_to(np.eye(d, dtype=complex), (size, d, d)).copy()
    t_cur = np.zeros(size)
    next_switch = waiting(state)
    t0 = 0.0
    for dt, a in pulse.intervals(0.0, T):
        t1 = t0 + dt
        eig = [np.linalg.eigh(model.hamiltonian(k, a)) for k in range(n)]
        w = np.array([e[0] for e in eig])
        v = np.array([e[1] for e in eig])
        idx = np.arange(size)
        while idx.size:
            s = state[idx]
            stop = np.minimum(next_switch[idx], t1)
            step = stop - t_cur[idx]
            vs = v[s]
            phase = np.exp(-1j * w[s] * step[:, None])
            prop = (vs * phase[:, None, :]) @ ops.dagger(vs)
            u[idx] = prop @ u[idx]
            t_cur[idx] = stop
            flip = next_switch[idx] < t1
            idx = idx[flip]
            if idx.size:
                r = rng.random(idx.size)
                new = (r[:, None] > cum[:, state[idx]].T).sum(axis=1)
                state[idx] = np.minimum(new, n - 1)
                next_switch[idx] = t_cur[idx] + waiting(state[idx])
        t0 = t1
    return u


def _block_sizes(n_traj: int, block_size: int) -> list[int]:
    full, rest = divmod(n_traj, block_size)
    return [block_size] * full + ([rest] if rest else [])


def sample_unitaries(model: MarkovNoiseModel, pulse: ControlPulse | None, n_traj: int,
                     seed: int, T: float | None = None, block_size: int = BLOCK_SIZE,
                     jobs: int = 1) -> np.ndarray:
    """Per-trajectory propagators, shape ``(n_traj, d, d)``, in trajectory order."""
    pulse = pulse if pulse is not None else ControlPulse([], [], 1.0, "idle")
    T = pulse.duration if T is None else T
    sizes = _block_sizes(n_traj, block_size)
    args = [(model, pulse, T, sz, seed, b) for b, sz in enumerate(sizes)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_block_unitaries, *zip(*args)))
    else:
        blocks = [_block_unitaries(*a) for a in args]
    return np.concatenate(blocks) if blocks else np.zeros((0, model.dim, model.dim), complex)


def state_estimate(us: np.ndarray, rho0: np.ndarray) -> McEstimate:
    n = us.shape[0]
    states = us @ rho0 @ ops.dagger(us)
    mean = states.mean(axis=0)
    # spread of the shifted data: identical samples give exactly zero
    shifted = states - states[0]
    se_re = shifted.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = shifted.imag.std(axis=0, ddof=1) / np.sqrt(n)
    entry_se = np.maximum(se_re, se_im)
    mean = 0.5 * (mean + ops.dagger(mean))
    return McEstimate(mean, float(entry_se.max()), n, entry_se)


def unitary_fidelities(us: np.ndarray, target) -> np.ndarray:
    """Average gate fidelity of each unitary channel against ``target``."""
    target = ops.as_matrix(target)
    d = target.shape[0]
    overlap = np.einsum("ab,nab->n", target.conj(), us)
    return (np.abs(overlap) ** 2 + d) / (d * (d + 1))


def batch_standard_error(values: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Standard error from the spread of ``n_batches`` batch means."""
    batches = np.array([b.mean() for b in np.array_split(values, n_batches)])
    return float(batches.std(ddof=1) / np.sqrt(n_batches))


def mean_and_error(values: np.ndarray) -> tuple[float, float]:
    # The average gate fidelity is linear in the averaged map, so the
    # fidelity of the mean channel is the mean of per-trajectory fidelities
    # and the plain standard error of the mean applies.
    spread = (values - values[0]).std(ddof=1)
    return float(values.mean()), float(spread / np.sqrt(values.size))


def mc_average_evolution(model: MarkovNoiseModel, rho0, pulse: ControlPulse | None,
                         n_traj: int, seed: int, T: float | None = None,
                         jobs: int = 1) -> McEstimate:
    """Trajectory-averaged state with its largest entrywise standard error."""
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    rho0 = ops.density_operator(rho0, weight=1.0)
    return state_estimate(sample_unitaries(model, pulse, n_traj, seed, T, jobs=jobs), rho0)


def mc_gate_fidelity(model: MarkovNoiseModel, pulse: ControlPulse, target,
                     n_traj: int, seed: int, T: float | None = None,
                     jobs: int = 1) -> tuple[float, float]:
    """Fidelity of the trajectory-averaged map and its standard error."""
    if n_traj < 2:
        raise ValueError("need at least two trajectories")
    us = sample_unitaries(model, pulse, n_traj, seed, T, jobs=jobs)
    return mean_and_error(unitary_fidelities(us, target))


def mc_state_and_fidelity(model: MarkovNoiseModel, rho0, pulse: ControlPulse, target,
                          n_traj: int, seed: int, T: float | None = None,
                          jobs: int = 1) -> tuple[McEstimate, float, float]:
    """Both estimates from one shared set of trajectories."""
    rho0 = ops.density_operator(rho0, weight=1.0)
    us = sample_unitaries(model, pulse, n_traj, seed, T, jobs=jobs)
    fid, err = mean_and_error(unitary_fidelities(us, target))
    return state_estimate(us, rho0), fid, err
