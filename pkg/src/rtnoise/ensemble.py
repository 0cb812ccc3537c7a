"""Coupled master equations for the noise-conditioned density operators.

Each conditional operator ``rho_k`` is the state averaged over noise
histories that currently sit in noise state ``k``, weighted so that
``Tr rho_k = P_k``.  They obey

    d rho_k / dt = -i [H_k(t), rho_k] + sum_j rates[k, j] rho_j

and the physical average state is ``sum_k rho_k``.

The exact backend stacks the column-stacked ``vec(rho_k)`` into one vector
of length ``N d^2`` (state index outermost) and exponentiates the constant
generator of every control segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .classical_noise import MarkovNoiseModel
from .pulses import ControlPulse

MAX_RK4_STEPS = 50_000_000
MIN_STEP = 1e-12


class EvolutionError(ValueError):
    pass


@dataclass(frozen=True)
class ConditionalEnsemble:
    parts: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        p = np.array(self.parts, dtype=complex)
        if p.ndim != 3 or p.shape[1] != p.shape[2]:
            raise EvolutionError(f"parts must have shape (N, d, d), got {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "parts", p)

    @property
    def n_states(self) -> int:
        return self.parts.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.trace(self.parts, axis1=1, axis2=2).real

    def validate(self, tol: float = 1e-9) -> None:
        """Check trace, Hermiticity and positivity of every part."""
        if abs(self.probabilities.sum() - 1) > tol:
            raise EvolutionError(f"total trace {self.probabilities.sum():.12g} != 1")
        for k, rho in enumerate(self.parts):
            if ops.hermiticity_error(rho) > tol:
                raise EvolutionError(f"part {k} is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
                raise EvolutionError(f"part {k} is not positive semidefinite")


def init_ensemble(rho0, model: MarkovNoiseModel) -> ConditionalEnsemble:
    """Split ``rho0`` over the noise states by their initial occupation."""
    rho0 = ops.density_operator(rho0, weight=1.0, check_positive=False)
    if rho0.shape[0] != model.dim:
        raise EvolutionError("state and model dimensions differ")
    p = model.initial_distribution()
    return ConditionalEnsemble(p[:, None, None] * rho0[None], 0.0)


def average_state(e: ConditionalEnsemble) -> np.ndarray:
    return e.parts.sum(axis=0)


def generator(model: MarkovNoiseModel, amplitude: float = 0.0) -> np.ndarray:
    """Generator acting on the stacked vectorized conditional operators."""
    n, d = model.n_states, model.dim
    big = np.kron(model.rates, np.eye(d * d)).astype(complex)
    for k in range(n):
        s = slice(k * d * d, (k + 1) * d * d)
        big[s, s] += ops.liouvillian(model.hamiltonian(k, amplitude))
    return big


def control_generator(model: MarkovNoiseModel) -> np.ndarray:
    """Derivative of :func:`generator` with respect to the control amplitude."""
    return np.kron(np.eye(model.n_states), ops.liouvillian(model.control))


def _pulse_or_idle(pulse: ControlPulse | None) -> ControlPulse:
    return pulse if pulse is not None else ControlPulse([], [], 1.0, "idle")


def default_backend(model: MarkovNoiseModel) -> str:
    return "exact" if model.dim <= 4 and model.n_states <= 4 else "rk4"


def rk4_step_size(model: MarkovNoiseModel, pulse: ControlPulse | None) -> float:
    a_max = pulse.a_max if pulse is not None else 1.0
    h = 0.01 / a_max
    rate = model.exit_rates().max(initial=0.0)
    if rate > 0:
        h = min(h, 1.0 / (100.0 * rate))
    hnorm = max(np.linalg.norm(hk, 2) for hk in model.drifts) + a_max * np.linalg.norm(model.control, 2)
    if hnorm > 0:
        h = min(h, 0.01 / hnorm)
    return h


def _rhs(parts: np.ndarray, hams: np.ndarray, rates: np.ndarray) -> np.ndarray:
    comm = hams @ parts - parts @ hams
    return -1j * comm + np.einsum("kj,jab->kab", rates, parts)


def evolve_ensemble(e: ConditionalEnsemble, model: MarkovNoiseModel, t1: float,
                    pulse: ControlPulse | None = None, backend: str = "auto",
                    step: float | None = None) -> ConditionalEnsemble:
    """Propagate the conditional ensemble from ``e.time`` to ``t1``.

    Parameters
    ----------
    e : ConditionalEnsemble
        Starting ensemble.
    model : MarkovNoiseModel
    t1 : float
        Final time, not earlier than ``e.time``.
    pulse : ControlPulse, optional
        Control amplitudes; zero outside the pulse and when omitted.
    backend : {"auto", "exact", "rk4"}
        ``exact`` exponentiates the stacked generator per constant segment,
        ``rk4`` integrates with a fixed step (see :func:`rk4_step_size`).
    step : float, optional
        Override the RK4 step.
    """
    if t1 < e.time:
        raise EvolutionError(f"cannot evolve backwards from t={e.time} to t={t1}")
    if e.n_states != model.n_states or e.parts.shape[1] != model.dim:
        raise EvolutionError("ensemble does not match the noise model")
    if backend == "auto":
        backend = default_backend(model)
    pulse = _pulse_or_idle(pulse)
    d = model.dim
    parts = np.array(e.parts)
    if backend == "exact":
        v = ops.vec(parts).reshape(-1)
        for dt, a in pulse.intervals(e.time, t1):
            v = ops.expm(generator(model, a) * dt) @ v
        parts = ops.unvec(v.reshape(model.n_states, d * d), d)
    elif backend == "rk4":
        h = rk4_step_size(model, pulse) if step is None else step
        if h < MIN_STEP:
            raise EvolutionError(f"RK4 step {h:.3e} underflows")
        for dt, a in pulse.intervals(e.time, t1):
            n = int(np.ceil(dt / h - 1e-12))
            if n > MAX_RK4_STEPS:
                raise EvolutionError(f"RK4 would need {n} steps")
            hh = dt / n
            hams = np.array([model.hamiltonian(k, a) for k in range(model.n_states)])
            for _ in range(n):
                k1 = _rhs(parts, hams, model.rates)
                k2 = _rhs(parts + 0.5 * hh * k1, hams, model.rates)
                k3 = _rhs(parts + 0.5 * hh * k2, hams, model.rates)
                k4 = _rhs(parts + hh * k3, hams, model.rates)
                parts = parts + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise EvolutionError(f"unknown backend {backend!r}")
    return ConditionalEnsemble(ops.symmetrize(parts), t1)


def evolve_average(rho0, model: MarkovNoiseModel, t1: float,
                   pulse: ControlPulse | None = None, backend: str = "auto") -> np.ndarray:
    """Average state at ``t1`` starting from ``rho0`` at ``t=0``."""
    return average_state(evolve_ensemble(init_ensemble(rho0, model), model, t1, pulse, backend))


def ensemble_trajectory(rho0, model: MarkovNoiseModel, times,
                        pulse: ControlPulse | None = None,
                        backend: str = "auto") -> np.ndarray:
    """Average states at increasing ``times`` (shape ``(len(times), d, d)``)."""
    e = init_ensemble(rho0, model)
    out = []
    for t in times:
        e = evolve_ensemble(e, model, float(t), pulse, backend)
        out.append(average_state(e))
    return np.array(out)


def ensemble_propagator(model: MarkovNoiseModel, pulse: ControlPulse | None,
                        t1: float | None = None) -> np.ndarray:
    """Exact propagator of the stacked conditional vector over ``[0, t1]``."""
    pulse = _pulse_or_idle(pulse)
    t1 = pulse.duration if t1 is None else t1
    s = np.eye(model.n_states * model.dim ** 2, dtype=complex)
    for dt, a in pulse.intervals(0.0, t1):
        s = ops.expm(generator(model, a) * dt) @ s
    return s


def split_and_sum(model: MarkovNoiseModel) -> tuple[np.ndarray, np.ndarray]:
    """Matrices mapping ``vec(rho0)`` onto the stacked split and back to the sum."""
    dd = model.dim ** 2
    p = model.initial_distribution()
    split = np.kron(p[:, None], np.eye(dd))
    total = np.kron(np.ones((1, model.n_states)), np.eye(dd))
    return split, total


def average_superoperator(model: MarkovNoiseModel, pulse: ControlPulse | None,
                          t1: float | None = None) -> np.ndarray:
    """Linear map ``vec(rho0) -> vec(rho(t1))`` of the noise-averaged evolution."""
    split, total = split_and_sum(model)
    return total @ ensemble_propagator(model, pulse, t1) @ split
