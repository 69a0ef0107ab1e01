"""Command line front end.

    ctrwlab run --config FILE [--seed U64] [--out DIR] [--threads N] [key=value ...]
    ctrwlab list

A config is one flat JSON object naming an ``experiment`` plus its
parameters; ``key=value`` arguments override fields (values are parsed as
JSON when possible).  Exit status: 0 all checks pass, 1 a tolerance check
failed (the report is still written), 2 usage or validation error, 3 numeric
failure during the run.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from typing import Dict, List, Optional

import numpy as np

from . import engine
from .calculus import IntegrandSpec
from .errors import CtrwError, NumericError
from .fracdiff import SdeCoeffs, estimate_density, msd_curve, verify_fractional_moment_equation
from .lab import (
    ExperimentReport,
    check_counting_bound,
    run_exponential_experiment,
    run_germano_experiment,
    run_theorem1_experiment,
    run_theorem2_experiment,
)
from .paths import JumpLaw
from .stable_rng import RngStream

__all__ = ["main", "run", "list_experiments", "EXPERIMENTS", "ConfigError"]


class ConfigError(CtrwError, ValueError):
    """Malformed or out-of-domain configuration."""


_COMMON = {"experiment": None, "seed": 0, "out": "results", "samples": False}

EXPERIMENTS: Dict[str, Dict] = {
    "counting_bound": {
        "description": "bounded scaled mean jump count E[N(nt)/n^beta] across n",
        "defaults": {
            "beta": 0.5, "t": 1.0, "t_scale": 4.0, "n_values": [10, 100, 1000],
            "replicates": 100000,
        },
    },
    "exponential": {
        "description": "stochastic exponential of a Rademacher CTRW vs exp{B(E_t) - E_t/2}",
        "defaults": {
            "beta": 0.5, "t": 1.0, "n_values": [100, 1000], "replicates": 10000,
            "reference_replicates": None, "op_step": None, "tolerance": 0.04,
        },
    },
    "fracdiff_msd": {
        "description": "particle tracking MSD slope and density of dX = b dB(E)",
        "defaults": {
            "beta": 0.5, "diffusion": 1.0, "x0": 0.0,
            "times": [2.0**k for k in range(-4, 5)], "replicates": 100000,
            "op_step": None, "bins": 100, "slope_tolerance": 0.05,
        },
    },
    "fracdiff_pde": {
        "description": "Caputo derivative of the simulated second moment equals b^2",
        "defaults": {
            "beta": 0.5, "diffusion": 1.0, "times": [0.5, 1.0, 2.0], "replicates": 100000,
            "dt": 0.01, "op_step": None, "tolerance": 0.1,
        },
    },
    "germano": {
        "description": "self-integral of the scaled compound Poisson walk vs (B_t^2 - t)/2",
        "defaults": {"t": 1.0, "n_values": [10, 100, 1000], "replicates": 10000, "tolerance": 0.03},
    },
    "theorem1": {
        "description": "integrals against stable-time CTRWs vs integrals against stable Levy motion",
        "defaults": {
            "alpha": 2.0, "integrand": "path", "t": 1.0, "n_values": [8, 64, 512],
            "replicates": 10000, "jump_law": None, "reference_replicates": None,
            "reference_steps": 2048, "tolerance": 0.03,
        },
    },
    "theorem2": {
        "description": "integrals against subdiffusive CTRWs vs integrals against B(E_t)",
        "defaults": {
            "beta": 0.5, "integrand": "one", "t": 1.0, "n_values": [10, 100, 1000],
            "replicates": 10000, "jump_law": "normal", "reference_replicates": None,
            "reference_steps": 256, "op_step": None, "tolerance": 0.04,
        },
    },
}

_INTEGRANDS = {
    "path": IntegrandSpec.path_itself,
    "one": lambda: IntegrandSpec.constant(1.0),
    "time": lambda: IntegrandSpec.deterministic(lambda s: np.asarray(s, dtype=float), "time"),
}


def list_experiments() -> str:
    width = max(len(k) for k in EXPERIMENTS)
    return "".join(
        f"{name.ljust(width)}  {EXPERIMENTS[name]['description']}\n" for name in sorted(EXPERIMENTS)
    )


# --- config handling --------------------------------------------------------


def _parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path: str, overrides: List[str] = (), seed: Optional[int] = None,
                out: Optional[str] = None) -> Dict:
    """Read, merge and validate a config; no randomness is touched here."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for item in overrides:
        k, v = _parse_override(item)
        raw[k] = v
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = out
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    defaults = EXPERIMENTS[name]["defaults"]
    unknown = sorted(set(raw) - set(_COMMON) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown field(s) for {name}: {', '.join(unknown)}")
    cfg = {**_COMMON, **defaults, **raw}
    _validate(cfg)
    return cfg


def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _validate(cfg: Dict) -> None:
    name = cfg["experiment"]
    _need(_is_int(cfg["seed"]) and 0 <= cfg["seed"] < 2**64, "seed must be an integer in [0, 2^64)")
    _need(isinstance(cfg["out"], str) and cfg["out"] != "", "out must be a directory path")
    _need(isinstance(cfg["samples"], bool), "samples must be true or false")
    _need(_is_int(cfg["replicates"]) and cfg["replicates"] >= 1, "replicates must be a positive integer")
    if "t" in cfg:
        _need(_is_real(cfg["t"]) and cfg["t"] > 0, "t must be positive")
    if "n_values" in cfg:
        ns = cfg["n_values"]
        _need(isinstance(ns, list) and ns and all(_is_int(n) and n >= 1 for n in ns),
              "n_values must be a nonempty list of positive integers")
        _need(len(set(ns)) == len(ns), "n_values must be distinct")
    if "times" in cfg:
        ts = cfg["times"]
        _need(isinstance(ts, list) and ts and all(_is_real(v) and v > 0 for v in ts),
              "times must be a nonempty list of positive numbers")
        _need(all(b > a for a, b in zip(ts, ts[1:])), "times must be strictly increasing")
    for key in ("tolerance", "slope_tolerance", "op_step", "dt", "t_scale"):
        if cfg.get(key) is not None:
            _need(_is_real(cfg[key]) and cfg[key] > 0, f"{key} must be positive")
    for key in ("reference_replicates", "reference_steps", "bins"):
        if cfg.get(key) is not None:
            _need(_is_int(cfg[key]) and cfg[key] >= 1, f"{key} must be a positive integer")
    if "alpha" in cfg:
        _need(_is_real(cfg["alpha"]) and 1 < cfg["alpha"] <= 2, "alpha must lie in (1, 2]")
    if "beta" in cfg:
        upper_closed = name == "counting_bound"
        ok = _is_real(cfg["beta"]) and 0 < cfg["beta"] and (
            cfg["beta"] <= 1 if upper_closed else cfg["beta"] < 1
        )
        _need(ok, "beta must lie in (0, 1]" if upper_closed else "beta must lie in (0, 1)")
    for key in ("diffusion", "x0"):
        if key in cfg:
            _need(_is_real(cfg[key]), f"{key} must be a finite number")
    if "integrand" in cfg:
        _need(cfg["integrand"] in _INTEGRANDS, f"integrand must be one of {sorted(_INTEGRANDS)}")
    if "jump_law" in cfg and cfg["jump_law"] is not None:
        _need(cfg["jump_law"] in ("normal", "rademacher"), "jump_law must be normal or rademacher")
        if name == "theorem1":
            _need(cfg["alpha"] == 2, "theorem1 accepts a jump_law only for alpha = 2")
    if name == "exponential":
        limit = 2.0 ** (2.0 / cfg["beta"])
        _need(min(cfg["n_values"]) > limit, f"every n must exceed 2^(2/beta) = {limit:g}")
    if name == "fracdiff_pde":
        for t in cfg["times"]:
            k = t / cfg["dt"]
            _need(abs(k - round(k)) <= 1e-9 * max(1.0, k) and round(k) >= 3,
                  f"time {t} must be a grid point k*dt with k >= 3")
    if name == "fracdiff_msd":
        _need(len(cfg["times"]) >= 3, "at least 3 times are needed for the slope fit")


# --- dispatch ---------------------------------------------------------------


def _jump_law(name: Optional[str]) -> Optional[JumpLaw]:
    return None if name is None else JumpLaw(name)


def _execute(cfg: Dict, stream: RngStream):
    """Return (report, extra files as {filename: writer(path)})."""
    name = cfg["experiment"]
    files = {}
    if name == "theorem1":
        rep = run_theorem1_experiment(
            cfg["alpha"], _INTEGRANDS[cfg["integrand"]](), cfg["n_values"], cfg["t"],
            cfg["replicates"], stream, jump_law=_jump_law(cfg["jump_law"]),
            reference_replicates=cfg["reference_replicates"],
            reference_steps=cfg["reference_steps"], tolerance=cfg["tolerance"],
        )
    elif name == "theorem2":
        rep = run_theorem2_experiment(
            cfg["beta"], _INTEGRANDS[cfg["integrand"]](), cfg["n_values"], cfg["t"],
            cfg["replicates"], stream, jump_law=_jump_law(cfg["jump_law"]),
            reference_replicates=cfg["reference_replicates"],
            reference_steps=cfg["reference_steps"], op_step=cfg["op_step"],
            tolerance=cfg["tolerance"],
        )
    elif name == "germano":
        rep = run_germano_experiment(
            cfg["n_values"], cfg["t"], cfg["replicates"], stream, tolerance=cfg["tolerance"]
        )
    elif name == "counting_bound":
        rep = check_counting_bound(
            cfg["beta"], cfg["t"], cfg["n_values"], cfg["replicates"], stream,
            t_scale=cfg["t_scale"],
        )
    elif name == "exponential":
        rep = run_exponential_experiment(
            cfg["beta"], cfg["n_values"], cfg["t"], cfg["replicates"], stream,
            reference_replicates=cfg["reference_replicates"], op_step=cfg["op_step"],
            tolerance=cfg["tolerance"],
        )
    elif name == "fracdiff_msd":
        coeffs = SdeCoeffs(0.0, float(cfg["diffusion"]), float(cfg["x0"]), cfg["beta"])
        curve, final = msd_curve(
            coeffs, cfg["times"], cfg["replicates"], stream, op_step=cfg["op_step"],
            keep_final=True,
        )
        dens = estimate_density(final, cfg["bins"])
        rep = ExperimentReport(
            "fracdiff_msd",
            {k: cfg[k] for k in ("beta", "diffusion", "x0", "times", "replicates", "bins")},
            stream.seed,
        )
        rep.per_n = [
            {"t": t, "msd": m, "se": s} for t, m, s in zip(curve.times, curve.msd, curve.se)
        ]
        rep.checks["slope_within_tolerance"] = (
            curve.slope is not None and abs(curve.slope - cfg["beta"]) <= cfg["slope_tolerance"]
        )
        rep.extras = {
            "slope": curve.slope, "intercept": curve.intercept,
            "slope_tolerance": cfg["slope_tolerance"], "density_time": curve.times[-1],
        }
        files["msd.csv"] = curve.to_csv
        files["density.csv"] = dens.to_csv
    else:  # fracdiff_pde
        rep = verify_fractional_moment_equation(
            cfg["beta"], cfg["times"], cfg["replicates"], stream,
            diffusion=float(cfg["diffusion"]), dt=cfg["dt"], op_step=cfg["op_step"],
            tolerance=cfg["tolerance"],
        )
    if cfg["samples"]:
        for label, vals in rep.samples.items():
            files[f"samples_{label}.csv"] = _samples_writer(vals)
    return rep, files


def _samples_writer(vals):
    def write(path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("value\n")
            fh.writelines(f"{float(v)!r}\n" for v in vals)
    return write


def _atomic(path: str, write) -> None:
    """Write through a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: Dict) -> int:
    """Run a validated config, write artifacts and return the exit status."""
    stream = RngStream.named(cfg["seed"], cfg["experiment"])
    rep, files = _execute(cfg, stream)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    text = rep.to_json()

    def write_report(p):
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    for fname, writer in sorted(files.items()):
        _atomic(os.path.join(out, fname), writer)
    _atomic(os.path.join(out, "report.json"), write_report)
    return 0 if rep.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctrwlab", description="CTRW Monte Carlo experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True, help="flat JSON config file")
    r.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    r.add_argument("--out", default=None, help="output directory (overrides config)")
    r.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    r.add_argument("overrides", nargs="*", metavar="key=value")
    sub.add_parser("list", help="list available experiments")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return 0
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.overrides, args.seed, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    engine.set_default_threads(args.threads)
    try:
        status = run(cfg)
    except NumericError as exc:
        print(f"numeric error: {exc} state={exc.state}", file=sys.stderr)
        return 3
    except CtrwError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        engine.set_default_threads(None)
    print(os.path.join(cfg["out"], "report.json"))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
