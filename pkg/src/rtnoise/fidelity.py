"""Process maps in the Pauli transfer representation and average gate fidelity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import operators as ops
from .born import CorrelationKernel, evolve_born_exponential
from .classical_noise import RtnSpec, rtn_model
from .defect import DefectModel, evolve_defect_blocks
from .ensemble import average_superoperator, evolve_average
from .pulses import ControlPulse

PAULI_BASIS = np.array([ops.pauli(a) for a in "IXYZ"]) / np.sqrt(2)
UNITARY_TOL = 1e-10
SOLVERS = ("ensemble", "born", "defect")


class FidelityError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessMap:
    """Real 4x4 matrix ``R[i, j] = Tr(P_i E(P_j))`` with ``P = (I, X, Y, Z)/sqrt(2)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (4, 4):
            raise FidelityError(f"process map must be 4x4, got {m.shape}")
        if np.max(np.abs(m.imag), initial=0.0) > 1e-9:
            raise FidelityError("map does not preserve Hermiticity")
        m = np.array(m.real, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def is_trace_preserving(self, tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.matrix[0], [1, 0, 0, 0], atol=tol))

    def apply(self, rho) -> np.ndarray:
        rho = ops.as_matrix(rho)
        coeffs = np.einsum("iab,ba->i", PAULI_BASIS, rho).real
        out = self.matrix @ coeffs
        return np.einsum("i,iab->ab", out, PAULI_BASIS)

    def compose(self, other: "ProcessMap") -> "ProcessMap":
        """``self`` after ``other``."""
        return ProcessMap(self.matrix @ other.matrix)

    @classmethod
    def identity(cls) -> "ProcessMap":
        return cls(np.eye(4))

    @classmethod
    def from_superoperator(cls, s: np.ndarray) -> "ProcessMap":
        """Convert a column-stacking superoperator ``vec(rho) -> vec(E(rho))``."""
        v = ops.vec(PAULI_BASIS)          # (4, 4): row i is vec(P_i)
        return cls(np.conj(v) @ s @ v.T)

    @classmethod
    def from_unitary(cls, u) -> "ProcessMap":
        u = ops.as_matrix(u)
        return cls.from_superoperator(np.kron(u.conj(), u))

    @classmethod
    def from_channel(cls, channel: Callable[[np.ndarray], np.ndarray]) -> "ProcessMap":
        """Tomograph a linear channel that accepts qubit density operators.

        Four pure inputs (|0>, |1>, |+>, |+i>) suffice by linearity.
        """
        inputs = [ops.from_bloch(v) for v in ([0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0])]
        e0, e1, ex, ey = (np.asarray(channel(r)) for r in inputs)
        images = {
            "I": e0 + e1,
            "X": 2 * ex - (e0 + e1),
            "Y": 2 * ey - (e0 + e1),
            "Z": e0 - e1,
        }
        cols = [images[a] / np.sqrt(2) for a in "IXYZ"]
        r = np.array([[np.trace(p @ c) for c in cols] for p in PAULI_BASIS])
        return cls(r)


def _check_unitary(u) -> np.ndarray:
    u = ops.as_matrix(u)
    if u.shape != (2, 2):
        raise FidelityError("target must be a single-qubit unitary")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > UNITARY_TOL:
        raise FidelityError("target is not unitary")
    return u


def fidelity_weights(target) -> np.ndarray:
    """``W`` with ``Phi = 1/2 + sum(W * R)`` for the transfer matrix ``R``."""
    r_u = ProcessMap.from_unitary(_check_unitary(target)).matrix
    w = r_u / 6.0
    w[0, :] = 0.0
    w[:, 0] = 0.0
    return w


def average_gate_fidelity(pmap: ProcessMap, target) -> float:
    """Uniform average of ``Tr(U rho0 U^+ E(rho0))`` over pure qubit states.

    The integrand is quadratic in the Bloch vector, so the six cardinal
    states give the exact average::

        Phi = 1/2 + (1/12) sum_j Tr(U s_j U^+ E(s_j)),   s_j in {X, Y, Z}
    """
    return float(0.5 + np.sum(fidelity_weights(target) * pmap.matrix))


def cardinal_state_fidelity(channel: Callable[[np.ndarray], np.ndarray], target) -> float:
    """Direct six-state average; slower reference for :func:`average_gate_fidelity`."""
    u = _check_unitary(target)
    vals = []
    for axis in range(3):
        for sign in (1, -1):
            v = np.zeros(3)
            v[axis] = sign
            rho0 = ops.from_bloch(v)
            vals.append(np.trace(u @ rho0 @ u.conj().T @ channel(rho0)).real)
    return float(np.mean(vals))


def make_channel(solver: str, delta: float, tau_c: float, pulse: ControlPulse | None,
                 T: float | None = None, backend: str = "auto"):
    """``rho0 -> rho(T)`` for RTN of strength ``delta`` along ``sigma_z/2``.

    ``solver`` picks the classical ensemble equations, the exponential-kernel
    memory equation (``g = delta``, ``K = sigma_z/2``) or the diagonal blocks
    of the defect model (``K_s = delta sigma_z/2``, rates ``1/tau_c``).
    """
    T = (pulse.duration if pulse is not None else 0.0) if T is None else T
    zeros = np.zeros((2, 2))
    k = ops.pauli("Z") / 2
    if solver == "ensemble":
        model = rtn_model(RtnSpec(delta, tau_c))
        return lambda rho0: evolve_average(rho0, model, T, pulse, backend)
    if solver == "born":
        kernel = CorrelationKernel.exponential(delta, tau_c)
        return lambda rho0: evolve_born_exponential(zeros, k, kernel, rho0, T, pulse).rho
    if solver == "defect":
        model = DefectModel(zeros, delta * k, 0.0, 1.0 / tau_c, 1.0 / tau_c)
        return lambda rho0: evolve_defect_blocks(model, rho0, T, pulse).system
    raise FidelityError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


def process_map(solver: str, pulse: ControlPulse | None, delta: float, tau_c: float,
                T: float | None = None) -> ProcessMap:
    if solver == "ensemble":
        model = rtn_model(RtnSpec(delta, tau_c))
        return ProcessMap.from_superoperator(average_superoperator(model, pulse, T))
    return ProcessMap.from_channel(make_channel(solver, delta, tau_c, pulse, T))


def gate_fidelity(pulse: ControlPulse, delta: float, tau_c: float,
                  target=None, solver: str = "ensemble") -> float:
    target = ops.pauli("X") if target is None else target
    return average_gate_fidelity(process_map(solver, pulse, delta, tau_c), target)


def fidelity_sweep(pulses: Iterable[ControlPulse] | dict, delta: float,
                   tau_cs: Iterable[float], solver: str = "ensemble",
                   target=None) -> list[dict]:
    """Rows ``{tau_c, pulse_name, delta, fidelity}`` in (tau_c, pulse) order."""
    if isinstance(pulses, dict):
        pulses = list(pulses.values())
    rows = []
    for tau_c in tau_cs:
        for p in pulses:
            rows.append({"tau_c": float(tau_c), "pulse_name": p.name, "delta": float(delta),
                         "fidelity": gate_fidelity(p, delta, tau_c, target, solver)})
    return rows
