"""Second-order (Born) master equations with a bath memory kernel.

Two solvers live here:

* :func:`evolve_born_exponential` handles the high-temperature case with the
  exponential kernel ``C(u) = exp(-2|u|/tau_c)``.  The history integral is
  carried as an auxiliary operator ``A`` so the memory equation becomes a
  local linear system for ``(rho, A)``::

      d rho/dt = -i [H_s, rho] - i g [K, A]
      d A/dt   = -(2/tau_c) A - i [H_s, A] - i g [K, rho],   A(0) = 0

  ``rho/2 +- A/2`` are then exactly the conditional operators of two-state
  telegraph noise with ``H_pm = H_s +- g K``.

* :func:`evolve_born_general` integrates the memory equation with distinct
  forward and backward correlation functions by direct quadrature over the
  stored history, in the interaction picture of ``H_s``.

The first-order term of the bath expansion vanishes for a zero-mean bath
operator and is never computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .pulses import ControlPulse


class KernelError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class CorrelationKernel:
    """Bath autocorrelation ``C(u)`` with coupling strength ``g``.

    ``form="exponential"`` uses ``exp(-2|u|/tau_c)`` for both directions.
    ``form="tabulated"`` samples the forward ``C(u, 0)`` and backward
    ``C(0, u)`` functions on ``u = 0, dt, 2 dt, ...`` and interpolates
    linearly in between.
    """

    form: str
    g: float
    tau_c: float | None = None
    forward_table: np.ndarray | None = field(default=None, repr=False)
    backward_table: np.ndarray | None = field(default=None, repr=False)
    dt: float | None = None

    def __post_init__(self):
        if self.form == "exponential":
            if self.tau_c is None or not self.tau_c > 0:
                raise KernelError("exponential kernel needs tau_c > 0")
        elif self.form == "tabulated":
            if self.forward_table is None or self.backward_table is None or not self.dt:
                raise KernelError("tabulated kernel needs forward, backward and dt")
            f = np.asarray(self.forward_table, dtype=complex)
            b = np.asarray(self.backward_table, dtype=complex)
            if f.shape != b.shape or f.ndim != 1 or f.size < 2:
                raise KernelError("forward and backward tables must be equal-length 1-D arrays")
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(b))):
                raise KernelError("kernel tables must be finite")
            object.__setattr__(self, "forward_table", f)
            object.__setattr__(self, "backward_table", b)
        else:
            raise KernelError(f"unknown kernel form {self.form!r}")

    @classmethod
    def exponential(cls, g: float, tau_c: float) -> "CorrelationKernel":
        return cls("exponential", g, tau_c)

    @classmethod
    def tabulate(cls, g: float, forward, backward, horizon: float,
                 dt: float) -> "CorrelationKernel":
        """Sample callables ``forward(u)``, ``backward(u)`` on ``[0, horizon]``."""
        u = np.arange(int(np.ceil(horizon / dt - 1e-9)) + 1) * dt
        return cls("tabulated", g, None, forward(u), backward(u), dt)

    @property
    def span(self) -> float:
        if self.form == "exponential":
            return np.inf
        return self.dt * (self.forward_table.size - 1)

    def _interp(self, table, u):
        grid = np.arange(table.size) * self.dt
        return np.interp(u, grid, table.real) + 1j * np.interp(u, grid, table.imag)

    def forward(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        if self.form == "exponential":
            return np.exp(-2.0 * u / self.tau_c)
        return self._interp(self.forward_table, u)

    def backward(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        if self.form == "exponential":
            return np.exp(-2.0 * u / self.tau_c)
        return self._interp(self.backward_table, u)

    def to_json(self) -> dict:
        if self.form == "exponential":
            return {"type": "exponential", "g": self.g, "tau_c": self.tau_c}
        return {"type": "tabulated", "g": self.g, "dt": self.dt,
                "forward": [[z.real, z.imag] for z in self.forward_table],
                "backward": [[z.real, z.imag] for z in self.backward_table]}

    @classmethod
    def from_json(cls, obj: dict) -> "CorrelationKernel":
        kind = obj.get("type")
        if kind == "exponential":
            return cls.exponential(float(obj["g"]), float(obj["tau_c"]))
        if kind == "tabulated":
            def table(key):
                arr = np.asarray(obj[key], dtype=float)
                return arr[:, 0] + 1j * arr[:, 1] if arr.ndim == 2 else arr.astype(complex)
            return cls("tabulated", float(obj["g"]), None, table("forward"),
                       table("backward"), float(obj["dt"]))
        raise KernelError(f"unknown kernel type {kind!r}")


@dataclass(frozen=True)
class MemoryState:
    """System state and the history operator ``A = rho_+ - rho_-``."""

    rho: np.ndarray
    aux: np.ndarray
    time: float = 0.0


def _system_parts(h_s, k, control):
    h_s = ops.hermitian(h_s)
    k = ops.hermitian(k)
    d = h_s.shape[0]
    if control is None:
        control = ops.pauli("X") / 2 if d == 2 else np.zeros((d, d), complex)
    control = ops.hermitian(control)
    if k.shape != h_s.shape or control.shape != h_s.shape:
        raise ops.OperatorError("H_s, K and the control operator must share a dimension")
    return h_s, k, control


def memory_generator(h: np.ndarray, k: np.ndarray, g: float, tau_c: float) -> np.ndarray:
    """Generator of the stacked ``[vec(rho), vec(A)]`` for a constant ``H_s``."""
    lh = ops.liouvillian(h)
    ck = -1j * g * (ops.spre(k) - ops.spost(k))
    decay = (2.0 / tau_c) * np.eye(lh.shape[0])
    return np.block([[lh, ck], [ck, lh - decay]])


def born_exponential_trajectory(h_s, k, kernel: CorrelationKernel, rho0, times,
                                pulse: ControlPulse | None = None,
                                control=None) -> list[MemoryState]:
    """Memory states at each of the increasing ``times``."""
    if kernel.form != "exponential":
        raise KernelError("the auxiliary-operator solver needs an exponential kernel")
    h_s, k, control = _system_parts(h_s, k, control)
    rho0 = ops.density_operator(rho0, weight=1.0, check_positive=False)
    d = h_s.shape[0]
    pulse = pulse if pulse is not None else ControlPulse([], [], 1.0, "idle")
    v = np.concatenate([ops.vec(rho0), np.zeros(d * d, complex)])
    t = 0.0
    out = []
    for t1 in times:
        if t1 < t:
            raise ops.OperatorError("sample times must be increasing")
        for dt, a in pulse.intervals(t, float(t1)):
            gen = memory_generator(h_s + a * control, k, kernel.g, kernel.tau_c)
            v = ops.expm(gen * dt) @ v
        t = float(t1)
        rho = ops.symmetrize(ops.unvec(v[: d * d], d))
        aux = ops.symmetrize(ops.unvec(v[d * d:], d))
        out.append(MemoryState(rho, aux, t))
    return out


def evolve_born_exponential(h_s, k, kernel: CorrelationKernel, rho0, T: float,
                            pulse: ControlPulse | None = None,
                            control=None) -> MemoryState:
    """Solve the exponential-kernel memory equation up to time ``T``.

    ``H_s(t) = h_s + a(t) * control`` with ``a(t)`` from ``pulse`` (zero when
    omitted).  ``control`` defaults to ``sigma_x/2`` for a qubit.
    """
    return born_exponential_trajectory(h_s, k, kernel, rho0, [T], pulse, control)[0]


def split_conditional(m: MemoryState) -> tuple[np.ndarray, np.ndarray]:
    """``(rho_+, rho_-) = (rho + A)/2, (rho - A)/2``."""
    return 0.5 * (m.rho + m.aux), 0.5 * (m.rho - m.aux)


@dataclass(frozen=True)
class GeneralSolve:
    rho: np.ndarray
    step: float
    change: float
    n_steps: int


def _time_grid(pulse: ControlPulse, T: float, h: float):
    """Grid aligned to pulse breakpoints, plus the amplitude on each step."""
    times, amps = [0.0], []
    t = 0.0
    for dt, a in pulse.intervals(0.0, T):
        m = max(1, int(np.ceil(dt / h - 1e-9)))
        times.extend(t + dt * np.arange(1, m + 1) / m)
        amps.extend([a] * m)
        t += dt
    times[-1] = T
    return np.array(times), np.array(amps)


def _general_fixed_step(h_s, k, control, kernel, rho0, T, pulse, h, memory_cutoff):
    times, amps = _time_grid(pulse, T, h)
    n = times.size - 1
    steps = np.diff(times)
    d = h_s.shape[0]
    g2 = kernel.g ** 2
    eye = np.eye(d * d)
    cf0 = complex(kernel.forward(0.0))
    cb0 = complex(kernel.backward(0.0))

    # interaction-picture coupling operator on the grid
    ktil = np.empty((n + 1, d, d), complex)
    u = np.eye(d, dtype=complex)
    ktil[0] = k
    step_cache: dict = {}
    for i in range(n):
        key = (amps[i], steps[i])
        if key not in step_cache:
            step_cache[key] = ops.unitary_propagator(h_s + amps[i] * control, steps[i])
        u = step_cache[key] @ u
        ktil[i + 1] = ops.dagger(u) @ k @ u

    qf = np.empty((n + 1, d, d), complex)   # K~(s) rho~(s)
    qb = np.empty((n + 1, d, d), complex)   # rho~(s) K~(s)
    rho = np.array(rho0, dtype=complex)
    qf[0], qb[0] = ktil[0] @ rho, rho @ ktil[0]
    f_prev = np.zeros((d, d), complex)      # memory integral is empty at t=0
    for i in range(n):
        hi = steps[i]
        t_new = times[i + 1]
        lo = 0
        if memory_cutoff is not None:
            lo = int(np.searchsorted(times, t_new - memory_cutoff, side="left"))
            lo = min(lo, i)
        w = np.empty(i + 1 - lo)
        # trapezoid weights for the history part s_lo..s_i of [0, t_new]
        left = np.concatenate([[0.0], steps[lo:i]]) if lo == 0 else steps[lo - 1:i]
        right = steps[lo:i + 1]
        w[:] = 0.5 * (left + right)
        lag = t_new - times[lo:i + 1]
        cf = kernel.forward(lag) * w
        cb = kernel.backward(lag) * w
        hist = np.tensordot(cf, qf[lo:i + 1], axes=1) - np.tensordot(cb, qb[lo:i + 1], axes=1)
        kn = ktil[i + 1]
        known = rho + 0.5 * hi * f_prev - 0.5 * hi * g2 * (kn @ hist - hist @ kn)
        kk = kn @ kn
        lmat = (cf0 * ops.spre(kk) - (cf0 + cb0) * ops.spre(kn) @ ops.spost(kn)
                + cb0 * ops.spost(kk))
        a = eye + (0.25 * hi * hi * g2) * lmat
        rho = ops.unvec(np.linalg.solve(a, ops.vec(known)), d)
        qf[i + 1], qb[i + 1] = kn @ rho, rho @ kn
        mem = hist + 0.5 * hi * (cf0 * qf[i + 1] - cb0 * qb[i + 1])
        f_prev = -g2 * (kn @ mem - mem @ kn)
    u_final = u
    return ops.symmetrize(u_final @ rho @ ops.dagger(u_final)), n


def evolve_born_general(h_s, k, kernel: CorrelationKernel, rho0, T: float,
                        pulse: ControlPulse | None = None, control=None, *,
                        step: float | None = None, tol: float = 1e-6,
                        initial_step: float = 0.02, max_refinements: int = 8,
                        memory_cutoff: float | None = None,
                        return_info: bool = False):
    """Integrate the memory master equation with forward/backward kernels.

    The equation is solved in the interaction picture of ``H_s(t)`` with the
    implicit trapezoidal rule for the time step and trapezoidal quadrature
    over the stored history.  Unless ``step`` is given, the step is halved
    until two successive solutions differ by less than ``tol`` in trace
    distance.

    Parameters
    ----------
    memory_cutoff : float, optional
        Drop history older than this lag.  Off by default.
    return_info : bool
        Return a :class:`GeneralSolve` instead of the bare final state.

    Raises
    ------
    QuadratureError
        If ``max_refinements`` halvings do not reach ``tol``.
    """
    h_s, k, control = _system_parts(h_s, k, control)
    rho0 = ops.density_operator(rho0, weight=1.0, check_positive=False)
    if T > kernel.span + 1e-12:
        raise KernelError(f"kernel tables cover lags up to {kernel.span}, need {T}")
    pulse = pulse if pulse is not None else ControlPulse([], [], 1.0, "idle")
    if T == 0:
        info = GeneralSolve(rho0, 0.0, 0.0, 0)
        return info if return_info else rho0
    if step is not None:
        rho, n = _general_fixed_step(h_s, k, control, kernel, rho0, T, pulse, step, memory_cutoff)
        info = GeneralSolve(rho, step, np.nan, n)
        return info if return_info else rho
    h = min(initial_step, T)
    prev, _ = _general_fixed_step(h_s, k, control, kernel, rho0, T, pulse, h, memory_cutoff)
    change = np.inf
    for _ in range(max_refinements):
        h /= 2
        rho, n = _general_fixed_step(h_s, k, control, kernel, rho0, T, pulse, h, memory_cutoff)
        change = ops.trace_distance(rho, prev)
        if change < tol:
            info = GeneralSolve(rho, h, change, n)
            return info if return_info else rho
        prev = rho
    raise QuadratureError(f"history quadrature did not converge: last change {change:.3e} "
                          f"> tol {tol:.1e}", change)
