"""Euler-Maruyama simulation of dz = b(t, z) dt + theta dw.

Paths advance by z[k+1] = z[k] + b(t_k, z[k])*dt + theta*sqrt(dt)*xi with
counter-based normals keyed by (seed, step, path), so an ensemble is a pure
function of (drift, theta, z0, grid, n_paths, seed) regardless of scheduling,
and two ensembles with one seed share their noise exactly.

A drift field may declare a guard region around a singularity; a path whose
update lands inside the guard is marked absorbed there, and its entries from
the absorption index onward are NaN.  Statistics (`moments`,
`estimate_drift`, `compare_pathwise`) skip non-finite entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._rng import normals_for_step
from .solutions import Theta

__all__ = [
    "EPSILON_FLOOR",
    "MIN_BIN_COUNT",
    "Guard",
    "DriftField",
    "TimeGrid",
    "PathEnsemble",
    "simulate",
    "moments",
    "Moments",
    "estimate_drift",
    "DriftBin",
    "drift_estimate_stderr",
    "compare_pathwise",
]

# Default guard radius around a drift singularity.
EPSILON_FLOOR = 1e-8

# Bins with fewer samples than this produce statistically meaningless drift
# estimates and are dropped from the output.
MIN_BIN_COUNT = 100


@dataclass(frozen=True)
class Guard:
    """Excluded region |q - center| < radius around a drift singularity."""

    center: float = 0.0
    radius: float = EPSILON_FLOOR

    def contains(self, q):
        return np.abs(np.asarray(q, float) - self.center) < self.radius


@dataclass(frozen=True)
class DriftField:
    """Drift b(t, q); ``fn`` must broadcast over a vector of positions."""

    fn: Callable[[float, np.ndarray], np.ndarray]
    guard: Guard | None = None

    def __call__(self, t: float, q: np.ndarray) -> np.ndarray:
        return self.fn(t, q)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid from t0 to t_end with `steps` steps."""

    t0: float
    t_end: float
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("need steps >= 1")
        if not self.t_end > self.t0:
            raise ValueError("need t_end > t0")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.steps

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t_end, self.steps + 1)


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths on a shared grid with full seed provenance.

    ``values`` has one row per path and steps + 1 columns; ``absorbed[i]`` is
    the index at which path i entered a guard region (-1 if it never did),
    and entries from that index onward are NaN.
    """

    grid: TimeGrid
    values: np.ndarray
    seed: int
    absorbed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, float)
        if values.ndim != 2 or values.shape[1] != self.grid.steps + 1:
            raise ValueError(
                f"values shape {values.shape} incompatible with {self.grid.steps + 1} columns"
            )
        absorbed = self.absorbed
        if absorbed is None:
            absorbed = np.full(values.shape[0], -1, dtype=np.int64)
        absorbed = np.asarray(absorbed, np.int64)
        if absorbed.shape != (values.shape[0],):
            raise ValueError("absorbed must have one entry per path")
        values.setflags(write=False)
        absorbed.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "absorbed", absorbed)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]


def _theta_value(theta: Theta | float) -> float:
    value = theta.value if isinstance(theta, Theta) else float(theta)
    if value < 0.0:
        raise ValueError(f"noise scale theta must be nonnegative, got {value}")
    return value


def simulate(
    drift: DriftField,
    theta: Theta | float,
    z0: float,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
) -> PathEnsemble:
    """Simulate an ensemble of Euler-Maruyama paths.

    theta = 0 is the deterministic (pure quadrature) limit.  Output is
    bit-identical for identical inputs; see :mod:`bernsim._rng`.
    """
    th = _theta_value(theta)
    if n_paths < 1:
        raise ValueError("need n_paths >= 1")
    if drift.guard is not None and bool(drift.guard.contains(z0)):
        raise ValueError(f"z0 = {z0} lies inside the drift guard region")

    times = grid.times()
    dt = grid.dt
    sq = th * sqrt(dt)
    values = np.empty((n_paths, grid.steps + 1))
    values[:, 0] = z0
    absorbed = np.full(n_paths, -1, dtype=np.int64)
    alive = np.ones(n_paths, dtype=bool)
    z = np.full(n_paths, float(z0))

    with np.errstate(all="ignore"):
        for k in range(grid.steps):
            xi = normals_for_step(seed, k, n_paths)
            xi *= sq
            xi += dt * np.asarray(drift(float(times[k]), z))
            z += xi
            if drift.guard is not None:
                # NaN then propagates through the remaining steps by itself
                hit = alive & np.asarray(drift.guard.contains(z))
                if np.any(hit):
                    absorbed[hit] = k + 1
                    alive &= ~hit
                    z[hit] = np.nan
            values[:, k + 1] = z
    return PathEnsemble(grid=grid, values=values, seed=int(seed), absorbed=absorbed)


class Moments(NamedTuple):
    mean: float
    variance: float
    count: int


def moments(ens: PathEnsemble, step: int) -> Moments:
    """Sample mean and unbiased variance over unabsorbed paths at one step."""
    if not 0 <= step <= ens.grid.steps:
        raise IndexError(f"step {step} out of range 0..{ens.grid.steps}")
    col = ens.values[:, step]
    vals = col[np.isfinite(col)]
    if vals.size == 0:
        raise ValueError(f"all paths absorbed at step {step}")
    variance = float(np.var(vals, ddof=1)) if vals.size > 1 else 0.0
    return Moments(mean=float(np.mean(vals)), variance=variance, count=int(vals.size))


class DriftBin(NamedTuple):
    center: float
    estimate: float
    count: int


def estimate_drift(
    ens: PathEnsemble, step: int, bin_edges: Sequence[float]
) -> list[DriftBin]:
    """Binned empirical drift (z[step+1] - z[step]) / dt by position at `step`.

    Bins with fewer than MIN_BIN_COUNT usable samples are omitted.
    """
    if not 0 <= step < ens.grid.steps:
        raise IndexError(f"step {step} has no successor on a {ens.grid.steps}-step grid")
    edges = np.asarray(bin_edges, float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin_edges must be an increasing sequence of at least two edges")
    z0 = ens.values[:, step]
    z1 = ens.values[:, step + 1]
    ok = np.isfinite(z0) & np.isfinite(z1)
    incr = (z1[ok] - z0[ok]) / ens.grid.dt
    pos = z0[ok]
    idx = np.digitize(pos, edges)
    out: list[DriftBin] = []
    for b in range(1, edges.size):
        sel = idx == b
        count = int(np.count_nonzero(sel))
        if count < MIN_BIN_COUNT:
            continue
        center = float((edges[b - 1] + edges[b]) / 2.0)
        out.append(DriftBin(center=center, estimate=float(np.mean(incr[sel])), count=count))
    return out


def drift_estimate_stderr(theta: Theta | float, count: int, dt: float) -> float:
    """Standard error of a binned drift estimate, theta / sqrt(count * dt)."""
    return _theta_value(theta) / sqrt(count * dt)


def compare_pathwise(a: PathEnsemble, b: PathEnsemble) -> float:
    """Exact sup |a - b| over entries finite in both ensembles."""
    if a.values.shape != b.values.shape or a.grid != b.grid:
        raise ValueError("ensembles differ in shape or grid")
    mask = np.isfinite(a.values) & np.isfinite(b.values)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(a.values[mask] - b.values[mask])))
