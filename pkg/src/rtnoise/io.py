"""File formats: state-trajectory, sweep and pulse CSVs plus JSON results.

Every CSV starts with ``#`` comment lines carrying the package version and
the fully resolved configuration, so a file documents how it was made.
Floats are written with ``repr`` for byte-stable reruns.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .pulses import ControlPulse

SWEEP_COLUMNS = ["tau_c", "pulse_name", "delta", "fidelity"]
MC_COLUMNS = SWEEP_COLUMNS + ["n_traj", "std_error"]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def header_lines(config: dict | None) -> list[str]:
    lines = [f"# rtnoise {__version__}"]
    if config is not None:
        lines.append("# config: " + json.dumps(config, sort_keys=True, default=_json_default))
    return lines


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_csv(path, columns: list[str], rows: Iterable[dict], config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in header_lines(config):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    """Rows of a CSV written by :func:`write_csv` (comment lines skipped)."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def read_header_config(path) -> dict | None:
    with Path(path).open() as fh:
        for ln in fh:
            if not ln.startswith("#"):
                break
            if ln.startswith("# config: "):
                return json.loads(ln[len("# config: "):])
    return None


def state_columns(d: int) -> list[str]:
    cols = ["t"]
    for i in range(d):
        for j in range(d):
            cols += [f"re_{i}{j}", f"im_{i}{j}"]
    return cols


def write_state_csv(path, times, states, config: dict | None = None) -> Path:
    states = np.asarray(states)
    d = states.shape[-1]
    cols = state_columns(d)
    rows = []
    for t, rho in zip(times, states):
        row = {"t": float(t)}
        for i in range(d):
            for j in range(d):
                row[f"re_{i}{j}"] = float(rho[i, j].real)
                row[f"im_{i}{j}"] = float(rho[i, j].imag)
        rows.append(row)
    return write_csv(path, cols, rows, config)


def read_state_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = read_csv(path)
    d = int(round(np.sqrt((len(rows[0]) - 1) / 2)))
    times = np.array([float(r["t"]) for r in rows])
    states = np.array([[[float(r[f"re_{i}{j}"]) + 1j * float(r[f"im_{i}{j}"])
                         for j in range(d)] for i in range(d)] for r in rows])
    return times, states


def write_pulse_csv(path, pulse: ControlPulse, config: dict | None = None) -> Path:
    starts = pulse.breakpoints()[:-1]
    rows = [{"t_start": float(t), "amplitude": float(a)} for t, a in zip(starts, pulse.amplitudes)]
    rows.append({"t_start": float(pulse.duration), "amplitude": 0.0})
    return write_csv(path, ["t_start", "amplitude"], rows, config)


def read_pulse_csv(path, a_max: float = 1.0, name: str = "pulse") -> ControlPulse:
    """Inverse of :func:`write_pulse_csv`; the last row marks the end time."""
    rows = read_csv(path)
    t = np.array([float(r["t_start"]) for r in rows])
    a = np.array([float(r["amplitude"]) for r in rows])
    return ControlPulse(np.diff(t), a[:-1], a_max, name)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path
