"""Classical continuous-time Markov noise acting on a closed quantum system.

Rate convention: ``rates[k, j]`` is the probability flow per unit time from
state ``j`` into state ``k`` (columns sum to zero), so occupation
probabilities obey ``dP/dt = rates @ P``.

For random telegraph noise (RTN) each directed flip happens at rate
``1/tau_c``; the +/-1 signal then has autocorrelation ``exp(-2|t|/tau_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .operators import as_matrix, hermitian, matrix_from_json, matrix_to_json, pauli

RATE_TOL = 1e-12


class NoiseModelError(ValueError):
    pass


def _rate_matrix(rates) -> np.ndarray:
    g = np.array(rates, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NoiseModelError(f"rate matrix must be square, got {g.shape}")
    off = g - np.diag(np.diag(g))
    if np.any(off < 0):
        raise NoiseModelError("off-diagonal rates must be non-negative")
    col = g.sum(axis=0)
    if np.any(np.abs(col) > RATE_TOL * max(1.0, np.abs(g).max())):
        raise NoiseModelError(f"rate matrix columns must sum to zero, got {col}")
    # rebuild the diagonal so probability conservation is exact by construction
    return off - np.diag(off.sum(axis=0))


@dataclass(frozen=True)
class MarkovNoiseModel:
    """N noise states, each with its own Hamiltonian ``drifts[k] + a * control``.

    ``a`` is the (piecewise-constant) control amplitude supplied by a
    :class:`~rtnoise.pulses.ControlPulse` at evolution time.
    """

    rates: np.ndarray
    drifts: np.ndarray
    control: np.ndarray = field(default=None)
    initial_probabilities: np.ndarray | None = None

    def __post_init__(self):
        g = _rate_matrix(self.rates)
        drifts = np.array([hermitian(h) for h in self.drifts])
        if drifts.shape[0] != g.shape[0]:
            raise NoiseModelError(f"{g.shape[0]} noise states but {drifts.shape[0]} Hamiltonians")
        d = drifts.shape[1]
        control = np.zeros((d, d), complex) if self.control is None else hermitian(self.control)
        if control.shape != (d, d):
            raise NoiseModelError("control operator dimension mismatch")
        p0 = self.initial_probabilities
        if p0 is not None:
            p0 = np.asarray(p0, dtype=float)
            if p0.shape != (g.shape[0],) or np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-12:
                raise NoiseModelError("initial probabilities must be a distribution over states")
        for name, val in (("rates", g), ("drifts", drifts), ("control", control),
                          ("initial_probabilities", p0)):
            if val is not None:
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def dim(self) -> int:
        return self.drifts.shape[1]

    def hamiltonian(self, k: int, amplitude: float = 0.0) -> np.ndarray:
        return self.drifts[k] + amplitude * self.control

    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.rates)

    def initial_distribution(self) -> np.ndarray:
        if self.initial_probabilities is not None:
            return self.initial_probabilities
        return stationary_distribution(self)

    def to_json(self) -> dict:
        return {
            "rates": self.rates.tolist(),
            "states": [{"delta_h": matrix_to_json(h)} for h in self.drifts],
            "control": matrix_to_json(self.control),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MarkovNoiseModel":
        try:
            drifts = [matrix_from_json(s["delta_h"]) for s in obj["states"]]
            control = matrix_from_json(obj["control"]) if "control" in obj else None
            return cls(obj["rates"], drifts, control)
        except KeyError as exc:
            raise NoiseModelError(f"noise model JSON is missing key {exc}") from None


@dataclass(frozen=True)
class RtnSpec:
    """Single bistable fluctuator of strength ``delta`` and correlation time ``tau_c``."""

    delta: float
    tau_c: float
    coupling_axis: np.ndarray = field(default_factory=lambda: pauli("Z") / 2)

    def __post_init__(self):
        if not self.tau_c > 0:
            raise NoiseModelError("tau_c must be positive")
        if self.delta < 0:
            raise NoiseModelError("delta must be non-negative")
        object.__setattr__(self, "coupling_axis", hermitian(self.coupling_axis))


def rtn_model(spec: RtnSpec, control=None) -> MarkovNoiseModel:
    """Two-state RTN model with ``H_pm = a * control +- delta * coupling_axis``.

    The default control operator is ``sigma_x / 2``, giving
    ``H_pm = [a sigma_x +- delta sigma_z] / 2``.  State 0 is ``+``.
    """
    k = spec.coupling_axis
    if control is None:
        control = pauli("X") / 2 if k.shape == (2, 2) else np.zeros_like(k)
    r = 1.0 / spec.tau_c
    rates = np.array([[-r, r], [r, -r]])
    return MarkovNoiseModel(rates, [spec.delta * k, -spec.delta * k], control)


def two_state_model(h_plus, h_minus, gamma_out: float, gamma_in: float,
                    control=None) -> MarkovNoiseModel:
    """Asymmetric two-state noise: ``+ -> -`` at ``gamma_out``, ``- -> +`` at ``gamma_in``."""
    if gamma_out < 0 or gamma_in < 0:
        raise NoiseModelError("rates must be non-negative")
    rates = np.array([[-gamma_out, gamma_in], [gamma_out, -gamma_in]])
    return MarkovNoiseModel(rates, [as_matrix(h_plus), as_matrix(h_minus)], control)


def stationary_distribution(model: MarkovNoiseModel | np.ndarray) -> np.ndarray:
    """Probability vector ``P`` with ``rates @ P = 0``.

    Raises :class:`NoiseModelError` if the zero eigenvalue is degenerate
    (reducible chain, e.g. all rates zero).
    """
    g = model.rates if isinstance(model, MarkovNoiseModel) else _rate_matrix(model)
    n = g.shape[0]
    if n == 1:
        return np.ones(1)
    scale = max(np.abs(g).max(), 1e-300)
    ns = linalg.null_space(g / scale, rcond=1e-10)
    if ns.shape[1] != 1:
        raise NoiseModelError(f"stationary state is not unique (null space dim {ns.shape[1]})")
    # augmented least squares pins normalization and sharpens the residual
    a = np.vstack([g / scale, np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    p = np.linalg.lstsq(a, b, rcond=None)[0]
    if np.any(p < -1e-12):
        raise NoiseModelError("stationary distribution has negative entries")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


@dataclass(frozen=True)
class NoiseTrajectory:
    """One realization: ``states[i]`` is occupied on ``[times[i], times[i+1])``."""

    initial_state: int
    switch_times: np.ndarray
    states: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.switch_times, dtype=float)
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] >= self.horizon):
            raise NoiseModelError("switch times must be strictly increasing inside (0, T)")
        object.__setattr__(self, "switch_times", t)
        object.__setattr__(self, "states", np.asarray(self.states, dtype=int))

    def state_at(self, t: float) -> int:
        i = np.searchsorted(self.switch_times, t, side="right")
        return int(self.initial_state if i == 0 else self.states[i - 1])

    def signal(self, t) -> np.ndarray:
        """+1/-1 signal for two-state noise (state 0 is +1)."""
        idx = np.searchsorted(self.switch_times, np.asarray(t), side="right")
        seq = np.concatenate([[self.initial_state], self.states])
        return 1 - 2 * seq[idx]


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for trajectory (or trajectory block) ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def sample_trajectory(model: MarkovNoiseModel, horizon: float,
                      rng: np.random.Generator) -> NoiseTrajectory:
    """Gillespie sample of the noise process on ``[0, horizon]``."""
    if not horizon > 0:
        raise NoiseModelError("horizon must be positive")
    p0 = model.initial_distribution()
    state = int(rng.choice(model.n_states, p=p0))
    initial = state
    exit_rates = model.exit_rates()
    times, states = [], []
    t = 0.0
    while True:
        lam = exit_rates[state]
        if lam <= 0:
            break
        t += rng.exponential(1.0 / lam)
        if t >= horizon:
            break
        jump = model.rates[:, state].copy()
        jump[state] = 0.0
        state = int(rng.choice(model.n_states, p=jump / jump.sum()))
        times.append(t)
        states.append(state)
    return NoiseTrajectory(initial, np.array(times), np.array(states, dtype=int), horizon)
