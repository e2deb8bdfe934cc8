"""Batch front door: ``bernsim <command> [--config FILE] [--key value ...] --out PATH``.

Commands
    simulate   paths CSV plus a final-step moments JSON; simulates either a
               Bernstein model (theta/z0/solution, optionally one transform
               parameter) or, when ``alpha`` is present, the affine rate model
    transform  grid CSV of the transformed solution and its drift plus a
               residual JSON
    classify   JSON with phi_tilde, A, B and the symmetry dimension
    verify     runs the full verification battery, prints one line per check,
               writes a JSON report when --out is given

Configuration is flat ``key=value`` lines ('#' starts a comment); command-line
flags override file values.  Exit status: 0 success, 1 validation error,
2 verification failure, 3 I/O error.  CSV output uses 17 significant digits so
re-reading reproduces every value bit-exactly; absorbed samples appear as
empty value fields.
"""

from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .rates import AffineRateModel, classify, simulate_rate, to_bernstein
from .sde import DriftField, PathEnsemble, TimeGrid, moments, simulate
from .solutions import (
    Constant,
    Exponential,
    GridSpec,
    PositiveSolution,
    PotentialSpec,
    ReversedKernel,
    Theta,
    pde_residual,
    sample_on_grid,
)
from .transforms import (
    DriftRate,
    LinearForce,
    OscillatorFreq,
    linear_drift,
    linear_transform,
    ou_drift,
    ou_transform,
    quadratic_drift,
    quadratic_transform,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "write_csv", "read_ensemble_csv", "main"]


class ConfigError(ValueError):
    """Invalid run configuration (exit status 1)."""


COMMANDS = ("simulate", "transform", "classify", "verify")

_FLOAT_KEYS = (
    "theta",
    "lambda_force",
    "omega",
    "beta_rate",
    "alpha",
    "beta",
    "phi",
    "lambda_mr",
    "r0",
    "z0",
    "t0",
    "t_end",
    "q0",
    "q1",
)
_INT_KEYS = ("steps", "paths", "seed", "bins", "qsteps")
_STR_KEYS = ("command", "solution", "out")
KNOWN_KEYS = frozenset(_FLOAT_KEYS + _INT_KEYS + _STR_KEYS)

_TRANSFORM_KEYS = ("lambda_force", "omega", "beta_rate")
_RATE_KEYS = ("alpha", "beta", "phi", "lambda_mr")


@dataclass(frozen=True)
class RunConfig:
    command: str
    theta: float | None = None
    lambda_force: float | None = None
    omega: float | None = None
    beta_rate: float | None = None
    alpha: float | None = None
    beta: float | None = None
    phi: float | None = None
    lambda_mr: float | None = None
    r0: float | None = None
    z0: float | None = None
    t0: float = 0.0
    t_end: float | None = None
    q0: float = -1.0
    q1: float = 1.0
    steps: int = 1000
    paths: int = 10000
    seed: int = 42
    bins: int = 20
    qsteps: int = 200
    solution: str = "constant"
    out: str | None = None


def _parse_value(key: str, text: str, origin: str):
    if key in _STR_KEYS:
        return text
    try:
        if key in _INT_KEYS:
            return int(text)
        value = float(text)
    except ValueError:
        raise ConfigError(f"{origin}: key '{key}' has unparseable number {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{origin}: key '{key}' must be finite, got {text!r}")
    return value


def parse_config(text: str, overrides: list[str] | tuple[str, ...] = ()) -> RunConfig:
    """Build a RunConfig from config-file text plus flag overrides.

    Overrides win over file values; unknown keys are rejected by name.
    """
    entries: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        entries[key] = (value, f"line {lineno}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override: expected key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"override: unknown key '{key}'")
        entries[key] = (value, "override")

    kwargs = {key: _parse_value(key, value, origin) for key, (value, origin) in entries.items()}
    if "command" not in kwargs:
        raise ConfigError("missing required key 'command'")
    if kwargs["command"] not in COMMANDS:
        raise ConfigError(f"unknown command '{kwargs['command']}' (one of {', '.join(COMMANDS)})")
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _require(cfg: RunConfig, keys: tuple[str, ...]) -> None:
    for key in keys:
        if getattr(cfg, key) is None:
            raise ConfigError(f"missing required key '{key}' for command '{cfg.command}'")


def _validate(cfg: RunConfig) -> None:
    if cfg.steps < 1:
        raise ConfigError(f"key 'steps' must be >= 1, got {cfg.steps}")
    if cfg.paths < 1:
        raise ConfigError(f"key 'paths' must be >= 1, got {cfg.paths}")
    if cfg.bins < 1:
        raise ConfigError(f"key 'bins' must be >= 1, got {cfg.bins}")
    transform_given = [k for k in _TRANSFORM_KEYS if getattr(cfg, k) is not None]
    if cfg.command == "simulate":
        if cfg.alpha is not None:
            _require(cfg, ("beta", "phi", "lambda_mr", "r0", "t_end", "out"))
            for key in ("theta", "z0", *_TRANSFORM_KEYS):
                if getattr(cfg, key) is not None:
                    raise ConfigError(f"key '{key}' does not apply to a rate-model simulate")
        else:
            _require(cfg, ("theta", "z0", "t_end", "out"))
            if len(transform_given) > 1:
                raise ConfigError(f"at most one of {', '.join(_TRANSFORM_KEYS)} may be set")
    elif cfg.command == "transform":
        _require(cfg, ("theta", "t_end", "out"))
        if len(transform_given) != 1:
            raise ConfigError(f"exactly one of {', '.join(_TRANSFORM_KEYS)} is required")
        if cfg.steps < 2:
            raise ConfigError("key 'steps' must be >= 2 for the transform grid")
        if cfg.qsteps < 3:
            raise ConfigError("key 'qsteps' must be >= 3")
        if not cfg.q1 > cfg.q0:
            raise ConfigError("need q1 > q0")
    elif cfg.command == "classify":
        _require(cfg, ("alpha", "beta", "phi", "lambda_mr", "out"))
    if cfg.t_end is not None and not cfg.t_end > cfg.t0:
        raise ConfigError("need t_end > t0")


def build_solution(selector: str, theta: Theta) -> PositiveSolution:
    """Parse 'constant', 'exponential:<a>' or 'kernel:<T>[:<center>]'."""
    parts = selector.split(":")
    kind = parts[0]
    try:
        if kind == "constant" and len(parts) == 1:
            return Constant(theta)
        if kind == "exponential" and len(parts) == 2:
            return Exponential(a=float(parts[1]), theta=theta)
        if kind == "kernel" and len(parts) in (2, 3):
            center = float(parts[2]) if len(parts) == 3 else 0.0
            return ReversedKernel(T=float(parts[1]), center=center, theta=theta)
    except ValueError as exc:
        raise ConfigError(f"bad solution selector {selector!r}: {exc}") from None
    raise ConfigError(f"bad solution selector {selector!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}" if math.isfinite(x) else ""


def write_csv(obj, path: str) -> None:
    """Write an ensemble or a sampled grid as round-trip-exact CSV.

    Ensembles get header ``path_id,t,value`` with one row per (path, time)
    and empty value fields for absorbed samples.  Grids are passed as a
    ``(GridSpec, eta, drift)`` triple and get header ``t,q,eta,drift``.
    """
    if isinstance(obj, PathEnsemble):
        times = obj.grid.times()
        with open(path, "w", newline="") as fh:
            fh.write("path_id,t,value\n")
            for i in range(obj.n_paths):
                row = obj.values[i]
                for k in range(times.size):
                    fh.write(f"{i},{_fmt(times[k])},{_fmt(row[k])}\n")
        return
    grid, eta, drift = obj
    times, qs = grid.times(), grid.qs()
    with open(path, "w", newline="") as fh:
        fh.write("t,q,eta,drift\n")
        for it in range(times.size):
            for iq in range(qs.size):
                fh.write(f"{_fmt(times[it])},{_fmt(qs[iq])},{_fmt(eta[it, iq])},{_fmt(drift[it, iq])}\n")


def read_ensemble_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read back an ensemble CSV; empty value fields become NaN."""
    times: list[float] = []
    rows: dict[int, list[float]] = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "path_id,t,value":
            raise ValueError(f"unexpected header {header.strip()!r}")
        for line in fh:
            pid_s, t_s, v_s = line.rstrip("\n").split(",")
            pid = int(pid_s)
            if pid == 0:
                times.append(float(t_s))
            rows.setdefault(pid, []).append(float(v_s) if v_s else math.nan)
    values = np.array([rows[i] for i in range(len(rows))])
    return np.array(times), values


def _json_dump(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _artifact_paths(out: str) -> tuple[str, str]:
    root, ext = os.path.splitext(out)
    if ext.lower() == ".csv":
        return out, root + ".json"
    if ext.lower() == ".json":
        return root + ".csv", out
    return out + ".csv", out + ".json"


def _bernstein_drift(cfg: RunConfig, theta: Theta):
    base = build_solution(cfg.solution, theta)
    if cfg.lambda_force is not None:
        force = LinearForce(cfg.lambda_force)
        return DriftField(lambda t, q: linear_drift(base, force, theta, t, q))
    if cfg.omega is not None:
        freq = OscillatorFreq(cfg.omega)
        return DriftField(lambda t, q: quadratic_drift(base, freq, theta, t, q))
    if cfg.beta_rate is not None:
        rate = DriftRate(cfg.beta_rate)
        return DriftField(lambda t, q: ou_drift(base, rate, theta, t, q))
    return DriftField(lambda t, q: base.drift(t, q))


def _run_simulate(cfg: RunConfig) -> None:
    grid = TimeGrid(cfg.t0, cfg.t_end, cfg.steps)
    if cfg.alpha is not None:
        model = _rate_model(cfg)
        ens = simulate_rate(model, cfg.r0, grid, cfg.paths, cfg.seed)
    else:
        theta = _theta(cfg)
        drift = _bernstein_drift(cfg, theta)
        ens = simulate(drift, theta, cfg.z0, grid, cfg.paths, cfg.seed)
    csv_path, json_path = _artifact_paths(cfg.out)
    write_csv(ens, csv_path)
    mom = moments(ens, grid.steps)
    _json_dump(
        {
            "command": "simulate",
            "t_end": cfg.t_end,
            "steps": cfg.steps,
            "n_paths": cfg.paths,
            "seed": cfg.seed,
            "mean": mom.mean,
            "variance": mom.variance,
            "unabsorbed": mom.count,
            "paths_csv": csv_path,
        },
        json_path,
    )


def _theta(cfg: RunConfig) -> Theta:
    try:
        return Theta(cfg.theta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _rate_model(cfg: RunConfig) -> AffineRateModel:
    try:
        return AffineRateModel(alpha=cfg.alpha, beta=cfg.beta, phi=cfg.phi, lambda_mr=cfg.lambda_mr)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _run_transform(cfg: RunConfig) -> None:
    theta = _theta(cfg)
    base = build_solution(cfg.solution, theta)
    try:
        if cfg.lambda_force is not None:
            tag = LinearForce(cfg.lambda_force)
            ts = linear_transform(base, tag, theta)
            pot, vec_a = PotentialSpec(lin=cfg.lambda_force), 0.0
            drift_fn = lambda t, q: linear_drift(base, tag, theta, t, q)
            params = {"lambda_force": cfg.lambda_force}
        elif cfg.omega is not None:
            tag = OscillatorFreq(cfg.omega)
            ts = quadratic_transform(base, tag, theta)
            pot, vec_a = PotentialSpec(quad=cfg.omega**2 / 2.0), 0.0
            drift_fn = lambda t, q: quadratic_drift(base, tag, theta, t, q)
            params = {"omega": cfg.omega}
        else:
            tag = DriftRate(cfg.beta_rate)
            ts = ou_transform(base, tag, theta)
            pot, vec_a = PotentialSpec(), theta.sq * cfg.beta_rate
            drift_fn = lambda t, q: ou_drift(base, tag, theta, t, q)
            params = {"beta_rate": cfg.beta_rate}
        grid = GridSpec(cfg.t0, cfg.t_end, cfg.steps, cfg.q0, cfg.q1, cfg.qsteps)
        eta = sample_on_grid(ts, grid)
        tt, qq = np.meshgrid(grid.times(), grid.qs(), indexing="ij")
        drift = np.asarray(drift_fn(tt, qq), float)
        residual = pde_residual(eta, grid, theta, pot, vec_a=vec_a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    csv_path, json_path = _artifact_paths(cfg.out)
    write_csv((grid, eta, drift), csv_path)
    _json_dump(
        {
            "command": "transform",
            "solution": cfg.solution,
            "theta": theta.value,
            **params,
            "residual": residual,
            "grid": {"t0": grid.t0, "t1": grid.t1, "nt": grid.nt, "q0": grid.q0, "q1": grid.q1, "nq": grid.nq},
            "grid_csv": csv_path,
        },
        json_path,
    )


def _run_classify(cfg: RunConfig) -> None:
    model = _rate_model(cfg)
    img = to_bernstein(model)
    dim = classify(model)
    _json_dump(
        {
            "command": "classify",
            "phi_tilde": img.phi_tilde,
            "A": img.inv_sq_A,
            "B": img.quad_B,
            "theta": img.theta.value,
            "drift_c1": img.drift_c1,
            "drift_c2": img.drift_c2,
            "dimension": dim.value,
        },
        cfg.out if cfg.out.endswith(".json") else cfg.out + ".json",
    )


def _run_verify(cfg: RunConfig) -> int:
    from .verify import run_all

    results = run_all(seed=cfg.seed, bins=cfg.bins)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}")
    all_passed = all(res.passed for res in results)
    if cfg.out is not None:
        path = cfg.out if cfg.out.endswith(".json") else cfg.out + ".json"
        _json_dump({"checks": [r.to_dict() for r in results], "all_passed": all_passed}, path)
    return 0 if all_passed else 2


def run(cfg: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit status."""
    if cfg.command == "simulate":
        _run_simulate(cfg)
    elif cfg.command == "transform":
        _run_transform(cfg)
    elif cfg.command == "classify":
        _run_classify(cfg)
    else:
        return _run_verify(cfg)
    return 0


def _parse_argv(argv: list[str]) -> RunConfig:
    if not argv:
        raise ConfigError("usage: bernsim <command> [--config FILE] [--key value ...] --out PATH")
    if argv[0].startswith("--"):
        raise ConfigError("the command must come first")
    overrides = [f"command={argv[0]}"]
    config_path = None
    i = 1
    while i < len(argv):
        token = argv[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        body = token[2:]
        if "=" in body:
            key, value = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(argv):
                raise ConfigError(f"flag --{key} needs a value")
            value = argv[i + 1]
            i += 2
        if key == "config":
            config_path = value
        else:
            overrides.append(f"{key}={value}")
    text = ""
    if config_path is not None:
        with open(config_path) as fh:
            text = fh.read()
    return parse_config(text, overrides)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = _parse_argv(argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
