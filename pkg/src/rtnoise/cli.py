"""Command-line entry point.

Subcommands: ``evolve``, ``fig1``, ``fig2``, ``check``, ``mc-validate`` and
``optimize``.  Each reads an optional JSON config (``--config``); flags given
on the command line override it.  Exit codes: 0 success, 1 failed check,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from . import operators as ops
from .born import CorrelationKernel, born_exponential_trajectory
from .classical_noise import RtnSpec, rtn_model
from .defect import DefectModel, evolve_defect_blocks
from .ensemble import ensemble_trajectory, evolve_average
from .experiments import (DURATION_LADDER, equivalence_check, fig1_panel, fig2_pulses,
                          optimize_gate)
from .fidelity import gate_fidelity
from .grape import OptimizationConfig, optimize_pulse, optimize_with_restarts
from .montecarlo import (batch_standard_error, mc_average_evolution, mean_and_error,
                         sample_unitaries, state_estimate, unitary_fidelities)
from .pulses import ControlPulse, composite_pulses

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2
SOLVER_CHOICES = ("ensemble", "born", "defect", "mc")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


# key -> (type, default); type is used for validation of JSON values
_COMMON = {"seed": (int, None), "jobs": (int, 1), "out": (str, "out")}
SCHEMAS = {
    "evolve": {"delta": (float, 0.125), "tau_c": (float, 5.0), "pulse": ((str, list), "pi"),
               "rho0": (list, [0.0, 0.0, 1.0]), "T": (float, None), "n_samples": (int, 50),
               "solver": (str, "ensemble"), "n_traj": (int, 10000)},
    "fig1": {"deltas": (list, [0.125, 0.25]), "tau_cs": (list, None),
             "tau_grid": (dict, {"n": 30, "lo": 0.1, "hi": 100.0}),
             "durations": (list, list(DURATION_LADDER)), "n_segments": (int, 64),
             "optimize": (bool, True)},
    "fig2": {"delta": (float, 0.125), "tau_cs": (list, [5.0, 20.0, 50.0]),
             "durations": (list, list(DURATION_LADDER)), "n_segments": (int, 64)},
    "check": {"deltas": (list, [0.05, 0.125, 0.25, 0.5, 1.0]),
              "tau_cs": (list, [0.5, 2.0, 5.0, 20.0, 50.0]), "pulse": ((str, list), "short_corpse"),
              "gamma_ratio": (float, 1.0), "tolerance": (float, 1e-7)},
    "mc-validate": {"deltas": (list, [0.05, 0.125, 0.25, 0.375, 0.5]),
                    "tau_cs": (list, [0.5, 2.0, 5.0, 20.0, 50.0]),
                    "pulse": ((str, list), "short_corpse"), "rho0": (list, [0.0, 0.0, 1.0]),
                    "n_traj": (int, 100000), "sigmas": (float, 3.0)},
    "optimize": {"delta": (float, 0.125), "tau_c": (float, 5.0), "n_segments": (int, 64),
                 "total_time": (float, 7 * np.pi / 3), "max_iters": (int, 2000),
                 "restarts": (int, 0), "ladder": (bool, False),
                 "durations": (list, list(DURATION_LADDER))},
}
STOCHASTIC = {"mc-validate"}
EXECUTION_KEYS = ("jobs", "out")


def _coerce(key: str, value, kind):
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if value is None:
        return None
    if float in kinds and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if int in kinds and isinstance(value, int) and not isinstance(value, bool):
        return value
    if bool in kinds and isinstance(value, bool):
        return value
    for k in kinds:
        if k not in (int, float, bool) and isinstance(value, k):
            return value
    names = "/".join(k.__name__ for k in kinds)
    raise ConfigError(key, f"expected {names}, got {type(value).__name__}")


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    schema = {**_COMMON, **SCHEMAS[command]}
    for key in file_cfg:
        if key not in schema:
            raise ConfigError(key, f"unknown key for '{command}'")
    cfg = {}
    for key, (kind, default) in schema.items():
        value = overrides[key] if overrides.get(key) is not None else file_cfg.get(key, default)
        cfg[key] = _coerce(key, value, kind)
    if command in STOCHASTIC or (command == "evolve" and cfg["solver"] == "mc"):
        if cfg["seed"] is None:
            raise ConfigError("seed", "a seed is mandatory for stochastic commands")
    if cfg["jobs"] < 1:
        raise ConfigError("jobs", "must be at least 1")
    for key in ("delta",):
        if key in cfg and cfg[key] is not None and cfg[key] < 0:
            raise ConfigError(key, "must be non-negative")
    for key in ("tau_c", "T", "total_time"):
        if key in cfg and cfg[key] is not None and not cfg[key] > 0:
            raise ConfigError(key, "must be positive")
    if "solver" in cfg and cfg["solver"] not in SOLVER_CHOICES:
        raise ConfigError("solver", f"must be one of {SOLVER_CHOICES}")
    return cfg


def load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        # name the last key read before the parser gave up, if any
        keys = re.findall(r'"([^"\\]+)"\s*:', text[:exc.pos])
        raise ConfigError(keys[-1] if keys else "config",
                          f"malformed JSON at line {exc.lineno} column {exc.colno}: "
                          f"{exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return obj


def parse_pulse(spec, key: str = "pulse") -> ControlPulse:
    if isinstance(spec, str):
        pulses = composite_pulses()
        if spec not in pulses:
            raise ConfigError(key, f"unknown pulse {spec!r}; expected one of {sorted(pulses)}")
        return pulses[spec]
    try:
        return ControlPulse.from_json(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(key, f"invalid pulse segments ({exc})") from None


def parse_rho0(spec, key: str = "rho0") -> np.ndarray:
    try:
        arr = np.asarray(spec, dtype=float)
        if arr.shape == (3,):
            return ops.from_bloch(arr)
        return ops.density_operator(ops.matrix_from_json(spec), weight=1.0)
    except (ValueError, TypeError) as exc:
        raise ConfigError(key, f"expected a Bloch vector or a [re, im] matrix ({exc})") from None


def _floats(key: str, values) -> list[float]:
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(key, "expected a list of numbers") from None


def _tau_grid(cfg) -> np.ndarray:
    if cfg["tau_cs"] is not None:
        return np.array(_floats("tau_cs", cfg["tau_cs"]))
    g = cfg["tau_grid"]
    try:
        return np.logspace(np.log10(g["lo"]), np.log10(g["hi"]), int(g["n"]))
    except (KeyError, TypeError, ValueError):
        raise ConfigError("tau_grid", "expected {n, lo, hi}") from None


def provenance(cfg: dict) -> dict:
    """Config recorded in output headers; execution-only settings are left
    out so files are identical across worker counts and output paths."""
    return {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}


def _map(fn, args: list, jobs: int) -> list:
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, *zip(*args)))
    return [fn(*a) for a in args]


# -- commands -----------------------------------------------------------------

def cmd_evolve(cfg: dict) -> int:
    pulse = parse_pulse(cfg["pulse"])
    rho0 = parse_rho0(cfg["rho0"])
    T = pulse.duration if cfg["T"] is None else cfg["T"]
    times = np.linspace(0.0, T, cfg["n_samples"] + 1)
    delta, tau_c = cfg["delta"], cfg["tau_c"]
    k = ops.pauli("Z") / 2
    zeros = np.zeros((2, 2))
    solver = cfg["solver"]
    if solver == "ensemble":
        states = ensemble_trajectory(rho0, rtn_model(RtnSpec(delta, tau_c)), times, pulse)
    elif solver == "born":
        ms = born_exponential_trajectory(zeros, k, CorrelationKernel.exponential(delta, tau_c),
                                         rho0, times, pulse)
        states = np.array([m.rho for m in ms])
    elif solver == "defect":
        dm = DefectModel(zeros, delta * k, 0.0, 1.0 / tau_c, 1.0 / tau_c)
        states = np.array([evolve_defect_blocks(dm, rho0, t, pulse).system for t in times])
    else:
        model = rtn_model(RtnSpec(delta, tau_c))
        states = np.array([rho0] + [mc_average_evolution(model, rho0, pulse, cfg["n_traj"],
                                                         cfg["seed"], t, jobs=cfg["jobs"]).mean_state
                                    for t in times[1:]])
    path = io.write_state_csv(Path(cfg["out"]) / f"evolve_{solver}.csv", times, states,
                              provenance(cfg))
    print(path)
    return EXIT_OK


def _fig1_job(delta, tau_cs, durations, n_segments, optimize):
    return fig1_panel(delta, tau_cs, durations, n_segments, optimize)


def cmd_fig1(cfg: dict) -> int:
    deltas = _floats("deltas", cfg["deltas"])
    tau_cs = _tau_grid(cfg)
    durations = tuple(_floats("durations", cfg["durations"]))
    panels = _map(_fig1_job, [(d, tau_cs, durations, cfg["n_segments"], cfg["optimize"])
                              for d in deltas], cfg["jobs"])
    out = Path(cfg["out"])
    summary = []
    for delta, panel in zip(deltas, panels):
        path = io.write_csv(out / f"fig1_delta{delta:g}.csv", io.SWEEP_COLUMNS, panel.rows(),
                            provenance(cfg))
        entry = {"delta": delta, "csv": path.name}
        if cfg["optimize"]:
            m = panel.margins()
            entry.update(min_margin=float(m.min()), worst_tau_c=float(tau_cs[np.argmin(m)]),
                         durations=[float(r.config.total_time) for r in panel.optimized])
        summary.append(entry)
        print(path)
    io.write_json(out / "fig1_summary.json", {"version": __version__, "config": provenance(cfg),
                                              "panels": summary})
    return EXIT_OK


def cmd_fig2(cfg: dict) -> int:
    results = fig2_pulses(cfg["delta"], _floats("tau_cs", cfg["tau_cs"]),
                          tuple(_floats("durations", cfg["durations"])), cfg["n_segments"])
    out = Path(cfg["out"])
    rows = []
    for tau_c, res in results.items():
        path = io.write_pulse_csv(out / f"fig2_tau{tau_c:g}.csv", res.pulse,
                                  {**provenance(cfg), "tau_c": tau_c})
        io.write_json(out / f"fig2_tau{tau_c:g}.json", {"version": __version__, **res.to_json()})
        rows.append({"tau_c": tau_c, "pulse_name": "optimized", "delta": cfg["delta"],
                     "fidelity": res.fidelity})
        print(path)
    io.write_csv(out / "fig2_summary.csv", io.SWEEP_COLUMNS, rows, provenance(cfg))
    return EXIT_OK


def cmd_check(cfg: dict) -> int:
    reports = equivalence_check(_floats("deltas", cfg["deltas"]), _floats("tau_cs", cfg["tau_cs"]),
                                parse_pulse(cfg["pulse"]), gamma_ratio=cfg["gamma_ratio"])
    tol = cfg["tolerance"]
    worst = max(reports, key=lambda r: r.max_distance)
    ok = worst.max_distance <= tol
    report = {"version": __version__, "config": provenance(cfg), "tolerance": tol, "passed": ok,
              "pairs": [r.to_json() for r in reports], "worst": worst.to_json()}
    path = io.write_json(Path(cfg["out"]) / "check.json", report)
    print(path)
    if not ok:
        print(f"equivalence check failed: {worst.pair} distance {worst.max_distance:.3e} "
              f"> {tol:.1e} at {worst.worst}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _mc_cell(delta, tau_c, pulse, rho0, n_traj, seed):
    model = rtn_model(RtnSpec(delta, tau_c))
    us = sample_unitaries(model, pulse, n_traj, seed)
    fids = unitary_fidelities(us, ops.pauli("X"))
    est = state_estimate(us, rho0)
    fid, err = mean_and_error(fids)
    exact_state = evolve_average(rho0, model, pulse.duration, pulse)
    exact_fid = gate_fidelity(pulse, delta, tau_c)
    diff = est.mean_state - exact_state
    dev = max(np.abs(diff.real).max(), np.abs(diff.imag).max())
    return {"tau_c": tau_c, "pulse_name": pulse.name, "delta": delta, "fidelity": fid,
            "n_traj": n_traj, "std_error": err, "batch_std_error": batch_standard_error(fids),
            "exact_fidelity": exact_fid, "state_std_error": est.std_error,
            "state_z": _zscore(dev, est.std_error), "fidelity_z": _zscore(abs(fid - exact_fid), err)}


def _zscore(dev: float, err: float) -> float:
    if err > 0:
        return float(dev / err)
    return 0.0 if dev < 1e-12 else float("inf")


def cmd_mc_validate(cfg: dict) -> int:
    pulse = parse_pulse(cfg["pulse"])
    rho0 = parse_rho0(cfg["rho0"])
    cells = [(d, t) for d in _floats("deltas", cfg["deltas"]) for t in _floats("tau_cs", cfg["tau_cs"])]
    # one independent stream family per grid cell
    args = [(d, t, pulse, rho0, cfg["n_traj"], cfg["seed"] * 1000 + i)
            for i, (d, t) in enumerate(cells)]
    rows = _map(_mc_cell, args, cfg["jobs"])
    out = Path(cfg["out"])
    columns = io.MC_COLUMNS + ["batch_std_error", "exact_fidelity", "state_std_error",
                               "state_z", "fidelity_z"]
    path = io.write_csv(out / "mc_validate.csv", columns, rows, provenance(cfg))
    print(path)
    bad = [r for r in rows if r["state_z"] > cfg["sigmas"] or r["fidelity_z"] > cfg["sigmas"]]
    if bad:
        print(f"{len(bad)} grid cells outside {cfg['sigmas']} standard errors", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_optimize(cfg: dict) -> int:
    if cfg["ladder"]:
        res = optimize_gate(cfg["delta"], cfg["tau_c"], tuple(_floats("durations", cfg["durations"])),
                            cfg["n_segments"], cfg["max_iters"])
    else:
        conf = OptimizationConfig(cfg["delta"], cfg["tau_c"], n_segments=cfg["n_segments"],
                                  total_time=cfg["total_time"], max_iters=cfg["max_iters"])
        if cfg["restarts"] > 0:
            res, _ = optimize_with_restarts(conf, cfg["restarts"], seed=cfg["seed"] or 0)
        else:
            res = optimize_pulse(conf)
    out = Path(cfg["out"])
    io.write_json(out / "optimize.json", {"version": __version__, **res.to_json()})
    path = io.write_pulse_csv(out / "optimize_pulse.csv", res.pulse, provenance(cfg))
    print(path)
    print(f"fidelity {res.fidelity:.12f} after {res.iterations} iterations")
    return EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "fig1": cmd_fig1, "fig2": cmd_fig2, "check": cmd_check,
            "mc-validate": cmd_mc_validate, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtnoise",
        description="Qubit dynamics under telegraph noise: solver checks, NOT-gate fidelity "
                    "sweeps, pulse optimization and Monte Carlo validation.")
    parser.add_argument("--version", action="version", version=f"rtnoise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int)
        p.add_argument("--solver", choices=SOLVER_CHOICES)
        schema = SCHEMAS[name]
        for key, (kind, _) in schema.items():
            if key == "solver":
                continue
            flag = "--" + key.replace("_", "-")
            if kind in (int, float):
                p.add_argument(flag, dest=key, type=kind)
            elif kind is str:
                p.add_argument(flag, dest=key)
            elif kind is bool:
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction)
            elif key in ("deltas", "tau_cs", "durations"):
                p.add_argument(flag, dest=key, type=float, nargs="+")
            elif key == "pulse":
                p.add_argument(flag, dest=key, help="pi, corpse or short_corpse")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(args.command, load_config_file(args.config), overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"rtnoise: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
