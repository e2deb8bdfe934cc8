"""Strictly positive closed-form solutions of the backward heat equation.

The free equation is

    d(eta)/dt = -(theta**2 / 2) * d2(eta)/dq2

and the drifted, potential-carrying variant checked by :func:`pde_residual`
reads

    theta**2 * d(eta)/dt = -(theta**4 / 2) * d2(eta)/dq2
                           + (a*q + b) * d(eta)/dq + V(q) * eta

with V(q) = inv_sq/q**2 + quad*q**2 + lin*q + const.  Every catalog solution
is evaluable in closed form together with its exact spatial log-derivative,
so process drifts theta**2 * d(log eta)/dq never come from numerical
differentiation.

The backward equation is ill-posed when integrated forward in time, so the
numerical companion :func:`propagate_reverse` integrates from the final time
downward (the well-posed direction) and serves as an independent check on
the closed forms; :func:`pde_residual` certifies any sampled field against
its claimed equation with centered second-order stencils on interior points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "Theta",
    "PositiveSolution",
    "Constant",
    "Exponential",
    "ReversedKernel",
    "PositiveMixture",
    "PotentialSpec",
    "GridSpec",
    "sample_on_grid",
    "pde_residual",
    "propagate_reverse",
]

# Relative margin keeping a reversed kernel's log-derivative finite near its
# horizon: the declared domain is t <= T - KERNEL_HORIZON_MARGIN * T.
KERNEL_HORIZON_MARGIN = 1e-6


class DomainError(ValueError):
    """Evaluation requested outside a solution's declared domain."""


@dataclass(frozen=True)
class Theta:
    """Diffusion scale; theta**2 multiplies spatial log-derivatives in drifts."""

    value: float

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError(f"theta must be positive, got {self.value}")

    @property
    def sq(self) -> float:
        return self.value * self.value


def _maybe_float(x: np.ndarray) -> float | np.ndarray:
    return float(x) if np.ndim(x) == 0 else x


class PositiveSolution:
    """Common surface of the catalog solutions.

    Subclasses implement ``_value`` (strictly positive on the declared
    domain), ``_dlogdq`` (exact spatial log-derivative) and ``contains``
    (domain test).  The public accessors enforce the domain and broadcast
    over numpy array arguments.
    """

    theta: Theta

    def _value(self, t, q):
        raise NotImplementedError

    def _dlogdq(self, t, q):
        raise NotImplementedError

    def contains(self, t, q) -> bool:
        return True

    def require_in_domain(self, t, q) -> None:
        if not self.contains(t, q):
            raise DomainError(f"({t!r}, {q!r}) outside domain of {type(self).__name__}")

    def value(self, t, q):
        self.require_in_domain(t, q)
        return self._value(t, q)

    def dlogdq(self, t, q):
        self.require_in_domain(t, q)
        return self._dlogdq(t, q)

    def drift(self, t, q):
        """Forward process drift theta**2 * d(log eta)/dq at (t, q)."""
        return _maybe_float(self.theta.sq * np.asarray(self.dlogdq(t, q)))


@dataclass(frozen=True)
class Constant(PositiveSolution):
    """The solution eta == 1."""

    theta: Theta

    def _value(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        return _maybe_float(np.ones(np.broadcast(t, q).shape))

    def _dlogdq(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        return _maybe_float(np.zeros(np.broadcast(t, q).shape))


@dataclass(frozen=True)
class Exponential(PositiveSolution):
    """eta(t, q) = exp(a*q - theta**2 * a**2 * t / 2); defined everywhere."""

    a: float
    theta: Theta

    def _value(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        return _maybe_float(np.exp(self.a * q - self.theta.sq * self.a**2 * t / 2.0))

    def _dlogdq(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        return _maybe_float(np.broadcast_to(np.float64(self.a), np.broadcast(t, q).shape).copy())


@dataclass(frozen=True)
class ReversedKernel(PositiveSolution):
    """Gaussian heat kernel run in reversed time, pinned at the horizon.

    eta(t, q) = (T - t)**(-1/2) * exp(-(q - center)**2 / (2 theta**2 (T - t)))

    valid for t <= T - KERNEL_HORIZON_MARGIN * T; its drift is the bridge
    drift -(q - center) / (T - t).
    """

    T: float
    center: float
    theta: Theta

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"horizon T must be positive, got {self.T}")

    @property
    def t_max(self) -> float:
        return self.T * (1.0 - KERNEL_HORIZON_MARGIN)

    def contains(self, t, q) -> bool:
        return bool(np.all(np.asarray(t, float) <= self.t_max))

    def _value(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        tau = self.T - t
        return _maybe_float(
            tau ** (-0.5) * np.exp(-((q - self.center) ** 2) / (2.0 * self.theta.sq * tau))
        )

    def _dlogdq(self, t, q):
        t, q = np.asarray(t, float), np.asarray(q, float)
        return _maybe_float(-(q - self.center) / (self.theta.sq * (self.T - t)))


@dataclass(frozen=True)
class PositiveMixture(PositiveSolution):
    """Weighted sum of solutions of the same free equation.

    All weights must be strictly positive (this is what guarantees strict
    positivity of the sum) and all components must share one theta.
    """

    weights: tuple[float, ...]
    components: tuple[PositiveSolution, ...]
    theta: Theta = field(init=False)

    def __init__(self, weights: Sequence[float], components: Sequence[PositiveSolution]):
        weights = tuple(float(w) for w in weights)
        components = tuple(components)
        if len(weights) != len(components) or not components:
            raise ValueError("weights and components must be nonempty and of equal length")
        if any(not w > 0.0 for w in weights):
            raise ValueError("mixture weights must all be strictly positive")
        thetas = {c.theta.value for c in components}
        if len(thetas) != 1:
            raise ValueError("mixture components must share a single theta")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "theta", components[0].theta)

    def contains(self, t, q) -> bool:
        return all(c.contains(t, q) for c in self.components)

    def _value(self, t, q):
        total = sum(w * np.asarray(c.value(t, q)) for w, c in zip(self.weights, self.components))
        return _maybe_float(total)

    def _dlogdq(self, t, q):
        vals = [w * np.asarray(c.value(t, q)) for w, c in zip(self.weights, self.components)]
        slopes = [np.asarray(c.dlogdq(t, q)) for c in self.components]
        num = sum(v * s for v, s in zip(vals, slopes))
        return _maybe_float(num / sum(vals))


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficients of V(q) = inv_sq/q**2 + quad*q**2 + lin*q + const.

    The constant term is reported modulo an additive energy shift.  A nonzero
    inverse-square coefficient excludes q = 0 from the domain.
    """

    inv_sq: float = 0.0
    quad: float = 0.0
    lin: float = 0.0
    const: float = 0.0

    def evaluate(self, q):
        q = np.asarray(q, float)
        if self.inv_sq != 0.0:
            if np.any(q == 0.0):
                raise DomainError("potential with inverse-square term is singular at q = 0")
            out = self.inv_sq / q**2 + self.quad * q**2 + self.lin * q + self.const
        else:
            out = self.quad * q**2 + self.lin * q + self.const
        return _maybe_float(out)


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid with nt time steps and nq space steps."""

    t0: float
    t1: float
    nt: int
    q0: float
    q1: float
    nq: int

    def __post_init__(self) -> None:
        if not self.t1 > self.t0:
            raise ValueError("need t1 > t0")
        if not self.q1 > self.q0:
            raise ValueError("need q1 > q0")
        if self.nt < 2:
            raise ValueError("need nt >= 2")
        if self.nq < 3:
            raise ValueError("need nq >= 3")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.nt

    @property
    def dq(self) -> float:
        return (self.q1 - self.q0) / self.nq

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt + 1)

    def qs(self) -> np.ndarray:
        return np.linspace(self.q0, self.q1, self.nq + 1)


def sample_on_grid(sol: PositiveSolution, grid: GridSpec) -> np.ndarray:
    """Sample a solution on the grid; shape (nt + 1, nq + 1), time-major."""
    tt, qq = np.meshgrid(grid.times(), grid.qs(), indexing="ij")
    sol.require_in_domain(tt, qq)
    return np.asarray(sol.value(tt, qq), float)


def _validate_field(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    values = np.asarray(values, float)
    if values.shape != (grid.nt + 1, grid.nq + 1):
        raise ValueError(
            f"field shape {values.shape} does not match grid ({grid.nt + 1}, {grid.nq + 1})"
        )
    if not np.all(values > 0.0):
        raise ValueError("field must be strictly positive")
    return values


def pde_residual(
    values: np.ndarray,
    grid: GridSpec,
    theta: Theta,
    pot: PotentialSpec | None = None,
    vec_a: float = 0.0,
    vec_b: float = 0.0,
) -> float:
    """Max absolute residual of the drifted backward heat equation.

    Evaluates theta**2 * eta_t + (theta**4 / 2) * eta_qq
    - (vec_a*q + vec_b) * eta_q - V(q) * eta on interior grid points with
    centered second-order stencils; boundary rows and columns are excluded,
    so the residual of an exact solution shrinks at second order under grid
    refinement.
    """
    v = _validate_field(values, grid)
    pot = pot or PotentialSpec()
    dt, dq = grid.dt, grid.dq
    inner = v[1:-1, 1:-1]
    eta_t = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * dt)
    eta_q = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * dq)
    eta_qq = (v[1:-1, 2:] - 2.0 * inner + v[1:-1, :-2]) / dq**2
    q_in = grid.qs()[1:-1]
    vq = np.asarray(pot.evaluate(q_in), float)
    resid = (
        theta.sq * eta_t
        + 0.5 * theta.sq**2 * eta_qq
        - (vec_a * q_in + vec_b) * eta_q
        - vq * inner
    )
    return float(np.max(np.abs(resid)))


def propagate_reverse(
    final_values: np.ndarray,
    grid: GridSpec,
    theta: Theta,
    pot: PotentialSpec | None = None,
    vec_a: float = 0.0,
    vec_b: float = 0.0,
    reference: PositiveSolution | Callable | None = None,
) -> np.ndarray:
    """Integrate the drifted backward heat equation from t1 down to t0.

    Explicit time stepping in the well-posed (decreasing-t) direction,
    requiring the stability bound theta**2 * dt / dq**2 <= 1/2.  Boundary
    columns are held at ``reference`` (a solution or a callable (t, q) ->
    value) when supplied, else filled by linear extrapolation from the two
    adjacent interior columns.  Returns the full field, shape
    (nt + 1, nq + 1), accurate to O(dt + dq**2) against any exact solution
    sharing the final data.
    """
    final_values = np.asarray(final_values, float)
    if final_values.shape != (grid.nq + 1,):
        raise ValueError(f"final data shape {final_values.shape} != ({grid.nq + 1},)")
    if not np.all(final_values > 0.0):
        raise ValueError("final data must be strictly positive")
    dt, dq = grid.dt, grid.dq
    mu = theta.sq * dt / dq**2
    if mu > 0.5 * (1.0 + 1e-12):
        raise ValueError(f"stability bound violated: theta^2*dt/dq^2 = {mu:.4g} > 1/2")
    pot = pot or PotentialSpec()
    qs = grid.qs()
    times = grid.times()
    vq_in = np.asarray(pot.evaluate(qs[1:-1]), float)
    drift_in = vec_a * qs[1:-1] + vec_b

    if reference is None:
        ref = None
    elif isinstance(reference, PositiveSolution):
        ref = reference.value
    else:
        ref = reference

    out = np.empty((grid.nt + 1, grid.nq + 1))
    out[-1] = final_values
    for m in range(grid.nt - 1, -1, -1):
        row = out[m + 1]
        lap = (row[2:] - 2.0 * row[1:-1] + row[:-2]) / dq**2
        slope = (row[2:] - row[:-2]) / (2.0 * dq)
        eta_t = (-0.5 * theta.sq**2 * lap + drift_in * slope + vq_in * row[1:-1]) / theta.sq
        new = np.empty_like(row)
        new[1:-1] = row[1:-1] - dt * eta_t
        if ref is not None:
            new[0] = ref(times[m], qs[0])
            new[-1] = ref(times[m], qs[-1])
        else:
            new[0] = 2.0 * new[1] - new[2]
            new[-1] = 2.0 * new[-2] - new[-3]
        out[m] = new
    return out
