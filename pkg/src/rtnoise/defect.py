"""System coupled to a two-level defect that exchanges electrons with a bath.

Ordering of the joint space is defect (x) system.  Defect basis index 0 is
the ``+`` eigenstate of ``sigma_z`` and index 1 the ``-`` eigenstate, so the
joint matrix splits into blocks::

    rho_ds = [[rho_pp, rho_pm],
              [rho_mp, rho_mm]]

with ``rho_ds[i*d + a, j*d + b] = block_ij[a, b]``.  The defect relaxes
``+ -> -`` at ``gamma1`` (tunneling out) and ``- -> +`` at ``gamma2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import operators as ops
from .classical_noise import MarkovNoiseModel
from .pulses import ControlPulse

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |-><+|
SIGMA_PLUS = SIGMA_MINUS.T.copy()


class DefectError(ValueError):
    pass


def detailed_balance_rates(epsilon: float, kT: float, gamma_sum: float) -> tuple[float, float]:
    """Rates with ``gamma1/gamma2 = exp(epsilon/kT)`` and ``gamma1 + gamma2 = gamma_sum``."""
    if not kT > 0 or not gamma_sum > 0:
        raise DefectError("kT and gamma_sum must be positive")
    # logistic form stays finite for large |epsilon/kT|
    x = epsilon / kT
    return float(gamma_sum * special.expit(x)), float(gamma_sum * special.expit(-x))


@dataclass(frozen=True)
class DefectModel:
    h_s: np.ndarray
    k_s: np.ndarray
    epsilon: float
    gamma1: float
    gamma2: float
    control: np.ndarray | None = None

    def __post_init__(self):
        h = ops.hermitian(self.h_s)
        k = ops.hermitian(self.k_s)
        if h.shape != k.shape:
            raise DefectError("h_s and k_s dimensions differ")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise DefectError("defect rates must be non-negative")
        d = h.shape[0]
        c = self.control
        if c is None:
            c = ops.pauli("X") / 2 if d == 2 else np.zeros((d, d), complex)
        c = ops.hermitian(c)
        if c.shape != h.shape:
            raise DefectError("control operator dimension mismatch")
        object.__setattr__(self, "h_s", h)
        object.__setattr__(self, "k_s", k)
        object.__setattr__(self, "control", c)

    @classmethod
    def from_temperature(cls, h_s, k_s, epsilon: float, kT: float, gamma_sum: float,
                         control=None) -> "DefectModel":
        g1, g2 = detailed_balance_rates(epsilon, kT, gamma_sum)
        return cls(h_s, k_s, epsilon, g1, g2, control)

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]

    def system_hamiltonian(self, amplitude: float = 0.0) -> np.ndarray:
        return self.h_s + amplitude * self.control

    def joint_hamiltonian(self, amplitude: float = 0.0) -> np.ndarray:
        d = self.dim
        sz = ops.pauli("Z")
        return (np.kron(np.eye(2), self.system_hamiltonian(amplitude))
                + 0.5 * self.epsilon * np.kron(sz, np.eye(d))
                + np.kron(sz, self.k_s))

    def stationary_split(self) -> tuple[float, float]:
        total = self.gamma1 + self.gamma2
        if total == 0:
            raise DefectError("defect rates are both zero; pass an explicit initial split")
        return self.gamma2 / total, self.gamma1 / total

    def to_json(self) -> dict:
        return {"h_s": ops.matrix_to_json(self.h_s), "k_s": ops.matrix_to_json(self.k_s),
                "epsilon": self.epsilon, "gamma1": self.gamma1, "gamma2": self.gamma2}

    @classmethod
    def from_json(cls, obj: dict) -> "DefectModel":
        try:
            h = ops.matrix_from_json(obj["h_s"])
            k = ops.matrix_from_json(obj["k_s"])
            if "gamma1" in obj:
                return cls(h, k, float(obj["epsilon"]), float(obj["gamma1"]), float(obj["gamma2"]))
            return cls.from_temperature(h, k, float(obj["epsilon"]), float(obj["kT"]),
                                        float(obj["gamma_sum"]))
        except KeyError as exc:
            raise DefectError(f"defect model JSON is missing key {exc}") from None


@dataclass(frozen=True)
class BlockState:
    pp: np.ndarray
    mm: np.ndarray
    pm: np.ndarray | None = None
    mp: np.ndarray | None = None

    @property
    def system(self) -> np.ndarray:
        return self.pp + self.mm


def joint_generator(model: DefectModel, amplitude: float = 0.0) -> np.ndarray:
    d = model.dim
    eye = np.eye(d)
    return (ops.liouvillian(model.joint_hamiltonian(amplitude))
            + model.gamma1 * ops.dissipator(np.kron(SIGMA_MINUS, eye))
            + model.gamma2 * ops.dissipator(np.kron(SIGMA_PLUS, eye)))


def diagonal_block_generator(model: DefectModel, amplitude: float = 0.0) -> np.ndarray:
    """Generator of ``[vec(rho_pp), vec(rho_mm)]``."""
    h = model.system_hamiltonian(amplitude)
    lp = ops.liouvillian(h + model.k_s)
    lm = ops.liouvillian(h - model.k_s)
    eye = np.eye(lp.shape[0])
    return np.block([[lp - model.gamma1 * eye, model.gamma2 * eye],
                     [model.gamma1 * eye, lm - model.gamma2 * eye]])


def offdiag_block_generator(model: DefectModel, amplitude: float = 0.0) -> np.ndarray:
    """Generator of ``vec(rho_pm)``."""
    h = model.system_hamiltonian(amplitude)
    eye = np.eye(model.dim ** 2)
    return (ops.liouvillian(h) - 1j * model.epsilon * eye
            - 1j * ops.anticommutator_super(model.k_s)
            - 0.5 * (model.gamma1 + model.gamma2) * eye)


def _propagate(gen_fn, v, pulse, T):
    pulse = pulse if pulse is not None else ControlPulse([], [], 1.0, "idle")
    for dt, a in pulse.intervals(0.0, T):
        v = ops.expm(gen_fn(a) * dt) @ v
    return v


def joint_blocks(rho_ds: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    r = np.asarray(rho_ds).reshape(2, d, 2, d)
    return r[0, :, 0, :], r[1, :, 1, :], r[0, :, 1, :], r[1, :, 0, :]


def block_matrix(pp, mm, pm=None, mp=None) -> np.ndarray:
    pm = np.zeros_like(pp) if pm is None else pm
    mp = ops.dagger(pm) if mp is None else mp
    return np.block([[pp, pm], [mp, mm]])


def trace_defect(rho_ds: np.ndarray, d: int) -> np.ndarray:
    return np.trace(np.asarray(rho_ds).reshape(2, d, 2, d), axis1=0, axis2=2)


def evolve_defect_full(model: DefectModel, rho_ds0, T: float,
                       pulse: ControlPulse | None = None) -> np.ndarray:
    """Joint defect (x) system state at ``T`` under the full Lindblad equation."""
    d = model.dim
    rho = ops.as_matrix(rho_ds0)
    if rho.shape != (2 * d, 2 * d):
        raise DefectError(f"joint state must be {2 * d}x{2 * d}, got {rho.shape}")
    v = _propagate(lambda a: joint_generator(model, a), ops.vec(rho), pulse, T)
    return ops.symmetrize(ops.unvec(v, 2 * d))


def evolve_defect_blocks(model: DefectModel, rho0, T: float,
                         pulse: ControlPulse | None = None,
                         initial_split: tuple[float, float] | None = None) -> BlockState:
    """Propagate only the diagonal blocks, starting from ``(p_+ rho0, p_- rho0)``.

    The default split is the stationary defect population.
    """
    rho0 = ops.density_operator(rho0, weight=1.0, check_positive=False)
    if rho0.shape[0] != model.dim:
        raise DefectError("state dimension does not match the model")
    p_plus, p_minus = model.stationary_split() if initial_split is None else initial_split
    v = np.concatenate([p_plus * ops.vec(rho0), p_minus * ops.vec(rho0)])
    v = _propagate(lambda a: diagonal_block_generator(model, a), v, pulse, T)
    dd = model.dim ** 2
    return BlockState(ops.symmetrize(ops.unvec(v[:dd])), ops.symmetrize(ops.unvec(v[dd:])))


def offdiag_block_dynamics(model: DefectModel, pm0, T: float,
                           pulse: ControlPulse | None = None) -> np.ndarray:
    """Propagate the closed equation for the off-diagonal block ``rho_pm``."""
    pm0 = ops.as_matrix(pm0)
    v = _propagate(lambda a: offdiag_block_generator(model, a), ops.vec(pm0), pulse, T)
    return ops.unvec(v, model.dim)


def equivalent_noise_model(model: DefectModel) -> MarkovNoiseModel:
    """Classical two-state noise with the same diagonal-block dynamics."""
    g1, g2 = model.gamma1, model.gamma2
    rates = np.array([[-g1, g2], [g1, -g2]])
    return MarkovNoiseModel(rates, [model.h_s + model.k_s, model.h_s - model.k_s], model.control)
