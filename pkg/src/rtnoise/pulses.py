"""Piecewise-constant control pulses and composite NOT sequences.

A pulse drives the qubit through ``a(t) sigma_x / 2``; a negative amplitude
is a rotation about ``-x``.  Units: amplitudes in ``a_max``, time in
``1/a_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

BOUND_TOL = 1e-12


class PulseError(ValueError):
    pass


@dataclass(frozen=True)
class ControlPulse:
    durations: np.ndarray
    amplitudes: np.ndarray
    a_max: float = 1.0
    name: str = field(default="pulse", compare=False)

    def __post_init__(self):
        d = np.array(self.durations, dtype=float).reshape(-1)
        a = np.array(self.amplitudes, dtype=float).reshape(-1)
        if d.shape != a.shape:
            raise PulseError("durations and amplitudes differ in length")
        if self.a_max <= 0:
            raise PulseError("a_max must be positive")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise PulseError("segment durations must be finite and non-negative")
        if np.any(np.abs(a) > self.a_max + BOUND_TOL):
            raise PulseError(f"amplitude exceeds bound a_max={self.a_max}")
        d.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def uniform(cls, amplitudes, total_time: float, a_max: float = 1.0,
                name: str = "pulse") -> "ControlPulse":
        amplitudes = np.asarray(amplitudes, dtype=float)
        n = amplitudes.size
        return cls(np.full(n, total_time / n), amplitudes, a_max, name)

    @property
    def n_segments(self) -> int:
        return self.durations.size

    @property
    def duration(self) -> float:
        return float(self.durations.sum())

    @property
    def area(self) -> float:
        return float(np.dot(self.durations, self.amplitudes))

    def breakpoints(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def amplitude_at(self, t: float) -> float:
        edges = self.breakpoints()
        if t < 0 or t >= edges[-1]:
            return 0.0
        return float(self.amplitudes[np.searchsorted(edges, t, side="right") - 1])

    def intervals(self, t0: float, t1: float) -> Iterator[tuple[float, float]]:
        """Yield ``(dt, amplitude)`` for the constant pieces covering [t0, t1].

        The control is zero outside the pulse support.
        """
        edges = self.breakpoints()
        t = t0
        while t < t1:
            if t < 0:
                nxt, amp = min(0.0, t1), 0.0
            elif t >= edges[-1]:
                nxt, amp = t1, 0.0
            else:
                k = np.searchsorted(edges, t, side="right") - 1
                nxt, amp = min(edges[k + 1], t1), self.amplitudes[k]
            if nxt > t:
                yield nxt - t, float(amp)
            t = nxt

    def reversed(self) -> "ControlPulse":
        return ControlPulse(self.durations[::-1], self.amplitudes[::-1], self.a_max,
                            self.name + "_reversed")

    def resample(self, n_segments: int, total_time: float | None = None) -> "ControlPulse":
        """Average the pulse onto ``n_segments`` equal bins over ``total_time``.

        Area within each bin is preserved; time beyond the pulse counts as zero.
        """
        T = self.duration if total_time is None else total_time
        bins = np.linspace(0.0, T, n_segments + 1)
        edges = self.breakpoints()
        cum = np.concatenate([[0.0], np.cumsum(self.durations * self.amplitudes)])
        area = np.interp(bins, edges, cum)
        amps = np.diff(area) / np.diff(bins)
        amps = np.clip(amps, -self.a_max, self.a_max)
        return ControlPulse(np.diff(bins), amps, self.a_max, self.name)

    def sign_changes(self, threshold: float = 1e-3) -> int:
        """Number of sign alternations among segments with ``|a| > threshold*a_max``."""
        s = np.sign(self.amplitudes[np.abs(self.amplitudes) > threshold * self.a_max])
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def lobes(self, threshold: float = 1e-3) -> list[tuple[float, float]]:
        """Maximal same-sign runs as ``(sign, area)`` pairs."""
        out: list[tuple[float, float]] = []
        for dt, a in zip(self.durations, self.amplitudes):
            if abs(a) <= threshold * self.a_max:
                continue
            s = float(np.sign(a))
            if out and out[-1][0] == s:
                out[-1] = (s, out[-1][1] + dt * a)
            else:
                out.append((s, dt * a))
        return out

    def to_json(self) -> list[dict]:
        return [{"duration": float(d), "amplitude": float(a)}
                for d, a in zip(self.durations, self.amplitudes)]

    @classmethod
    def from_json(cls, obj, a_max: float = 1.0, name: str = "pulse") -> "ControlPulse":
        if isinstance(obj, dict):
            a_max = obj.get("a_max", a_max)
            name = obj.get("name", name)
            obj = obj["segments"]
        return cls([s["duration"] for s in obj], [s["amplitude"] for s in obj], a_max, name)


def _from_angles(angles, signs, a_max: float, name: str) -> ControlPulse:
    angles = np.asarray(angles, dtype=float)
    return ControlPulse(angles / a_max, a_max * np.asarray(signs, dtype=float), a_max, name)


def pi_pulse(a_max: float = 1.0) -> ControlPulse:
    return _from_angles([np.pi], [1], a_max, "pi")


def corpse_not(a_max: float = 1.0) -> ControlPulse:
    """CORPSE NOT gate: x-rotations of 7pi/3, -5pi/3, pi/3."""
    return _from_angles(np.pi * np.array([7, 5, 1]) / 3, [1, -1, 1], a_max, "corpse")


def short_corpse_not(a_max: float = 1.0) -> ControlPulse:
    """Short CORPSE NOT gate: x-rotations of pi/3, -5pi/3, pi/3."""
    return _from_angles(np.pi * np.array([1, 5, 1]) / 3, [1, -1, 1], a_max, "short_corpse")


def composite_pulses(a_max: float = 1.0) -> dict[str, ControlPulse]:
    return {p.name: p for p in (pi_pulse(a_max), corpse_not(a_max), short_corpse_not(a_max))}
