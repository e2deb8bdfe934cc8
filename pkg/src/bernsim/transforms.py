"""Exact maps turning free backward-heat solutions into solutions with a
linear potential, a quadratic potential, or a linear gradient drift.

Each map is represented lazily (base solution + parameter tag), so values
and drifts come from exact closed-form composition rather than grids or
numerical differentiation.  The matching process-drift identities are
exposed as standalone functions and are expected to agree with the
transformed solution's own log-derivative drift to floating-point accuracy:

    linear     eta_V(t,q) = exp(-lam^2 t^3/(6 th^2)) exp(lam t q / th^2)
                            * eta(t, q - lam t^2/2)
               drift_V    = lam t + drift(t, q - lam t^2/2)

    quadratic  eta_V(t,q) = cosh(w t)^(-1/2) exp(w q^2 tanh(w t)/(2 th^2))
                            * eta(tanh(w t)/w, q / cosh(w t))
               drift_V    = w q tanh(w t) + drift(tanh(w t)/w, q/cosh(w t))
                            / cosh(w t)

    gradient   eta_V(t,q) = eta((exp(2 b t) - 1)/(2 b), exp(b t) q)
               drift_V    = exp(b t) * drift(...) - b q

The gradient-drift case subtracts the first-order vector-potential term
b*q; with the constant base solution it reduces to the Ornstein-Uhlenbeck
drift -b*q.  Parameters below ``PARAM_EPS`` in magnitude take the analytic
zero-parameter limit (the identity map) to avoid cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solutions import PositiveSolution, Theta, _maybe_float

__all__ = [
    "PARAM_EPS",
    "LinearForce",
    "OscillatorFreq",
    "DriftRate",
    "TransformedSolution",
    "linear_transform",
    "linear_drift",
    "pathwise_map_linear",
    "map_ensemble_linear",
    "quadratic_transform",
    "quadratic_drift",
    "ou_transform",
    "ou_drift",
]

# Below this magnitude the removable singularities (exp(2bt)-1)/(2b) and
# tanh(wt)/w are replaced by their analytic limit t.
PARAM_EPS = 1e-8


@dataclass(frozen=True)
class LinearForce:
    """Constant force: target potential V(q) = lambda_force * q."""

    lambda_force: float


@dataclass(frozen=True)
class OscillatorFreq:
    """Oscillator frequency: target potential V(q) = omega**2 * q**2 / 2."""

    omega: float

    def __post_init__(self) -> None:
        if self.omega < 0.0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")


@dataclass(frozen=True)
class DriftRate:
    """Gradient-drift rate: target equation carries drift term theta**2*beta*q."""

    beta_rate: float


def _check_theta(base: PositiveSolution, theta: Theta) -> None:
    if base.theta.value != theta.value:
        raise ValueError(
            f"theta mismatch: base carries {base.theta.value}, transform given {theta.value}"
        )


@dataclass(frozen=True)
class TransformedSolution(PositiveSolution):
    """A base solution composed with one of the three closed-form maps."""

    base: PositiveSolution
    tag: LinearForce | OscillatorFreq | DriftRate
    theta: Theta

    def _source_point(self, t, q):
        """Map (t, q) to the base solution's arguments."""
        t = np.asarray(t, float)
        q = np.asarray(q, float)
        if isinstance(self.tag, LinearForce):
            lam = self.tag.lambda_force
            return t, q - lam * t**2 / 2.0
        if isinstance(self.tag, OscillatorFreq):
            w = self.tag.omega
            if w < PARAM_EPS:
                return t, q
            return np.tanh(w * t) / w, q / np.cosh(w * t)
        b = self.tag.beta_rate
        if abs(b) < PARAM_EPS:
            return t, q
        return np.expm1(2.0 * b * t) / (2.0 * b), np.exp(b * t) * q

    def contains(self, t, q) -> bool:
        ts, qs = self._source_point(t, q)
        return self.base.contains(ts, qs)

    def _value(self, t, q):
        t = np.asarray(t, float)
        q = np.asarray(q, float)
        ts, qs = self._source_point(t, q)
        inner = np.asarray(self.base._value(ts, qs))
        if isinstance(self.tag, LinearForce):
            lam = self.tag.lambda_force
            pref = np.exp(-(lam**2) * t**3 / (6.0 * self.theta.sq) + lam * t * q / self.theta.sq)
            return _maybe_float(pref * inner)
        if isinstance(self.tag, OscillatorFreq):
            w = self.tag.omega
            if w < PARAM_EPS:
                return _maybe_float(inner)
            th = np.tanh(w * t)
            pref = np.cosh(w * t) ** (-0.5) * np.exp(w * q**2 * th / (2.0 * self.theta.sq))
            return _maybe_float(pref * inner)
        return _maybe_float(inner)

    def _dlogdq(self, t, q):
        t = np.asarray(t, float)
        q = np.asarray(q, float)
        ts, qs = self._source_point(t, q)
        inner = np.asarray(self.base._dlogdq(ts, qs))
        if isinstance(self.tag, LinearForce):
            lam = self.tag.lambda_force
            return _maybe_float(lam * t / self.theta.sq + inner)
        if isinstance(self.tag, OscillatorFreq):
            w = self.tag.omega
            if w < PARAM_EPS:
                return _maybe_float(inner)
            return _maybe_float(w * q * np.tanh(w * t) / self.theta.sq + inner / np.cosh(w * t))
        b = self.tag.beta_rate
        if abs(b) < PARAM_EPS:
            return _maybe_float(inner)
        return _maybe_float(np.exp(b * t) * inner)


def linear_transform(base: PositiveSolution, f: LinearForce, theta: Theta) -> TransformedSolution:
    """Solution of the linear-potential equation V(q) = lambda_force * q."""
    _check_theta(base, theta)
    return TransformedSolution(base=base, tag=f, theta=theta)


def quadratic_transform(
    base: PositiveSolution, f: OscillatorFreq, theta: Theta
) -> TransformedSolution:
    """Solution of the quadratic-potential equation V(q) = omega**2 q**2 / 2."""
    _check_theta(base, theta)
    return TransformedSolution(base=base, tag=f, theta=theta)


def ou_transform(base: PositiveSolution, f: DriftRate, theta: Theta) -> TransformedSolution:
    """Solution of the gradient-drift equation (drift term theta**2*beta*q)."""
    _check_theta(base, theta)
    return TransformedSolution(base=base, tag=f, theta=theta)


def linear_drift(base: PositiveSolution, f: LinearForce, theta: Theta, t, q):
    """Process drift of the linear-potential model: lam*t + drift(t, q - lam t^2/2)."""
    _check_theta(base, theta)
    t = np.asarray(t, float)
    q = np.asarray(q, float)
    lam = f.lambda_force
    qs = q - lam * t**2 / 2.0
    return _maybe_float(lam * t + theta.sq * np.asarray(base.dlogdq(t, qs)))


def quadratic_drift(base: PositiveSolution, f: OscillatorFreq, theta: Theta, t, q):
    """Process drift of the quadratic-potential model."""
    _check_theta(base, theta)
    t = np.asarray(t, float)
    q = np.asarray(q, float)
    w = f.omega
    if w < PARAM_EPS:
        return _maybe_float(theta.sq * np.asarray(base.dlogdq(t, q)))
    ts, qs = np.tanh(w * t) / w, q / np.cosh(w * t)
    inner = theta.sq * np.asarray(base.dlogdq(ts, qs))
    return _maybe_float(w * q * np.tanh(w * t) + inner / np.cosh(w * t))


def ou_drift(base: PositiveSolution, f: DriftRate, theta: Theta, t, q):
    """Process drift of the gradient-drift model, vector potential subtracted."""
    _check_theta(base, theta)
    t = np.asarray(t, float)
    q = np.asarray(q, float)
    b = f.beta_rate
    if abs(b) < PARAM_EPS:
        return _maybe_float(theta.sq * np.asarray(base.dlogdq(t, q)))
    scale = np.exp(b * t)
    ts, qs = np.expm1(2.0 * b * t) / (2.0 * b), scale * q
    inner = theta.sq * np.asarray(base.dlogdq(ts, qs))
    return _maybe_float(scale * inner - b * q)


def pathwise_map_linear(times, values, f: LinearForce):
    """Shift sampled paths by the deterministic translation lam * t**2 / 2.

    ``values`` may be a single path (1-D, aligned with ``times``) or a stack
    of paths with time along the last axis.
    """
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    if values.shape[-1] != times.shape[0]:
        raise ValueError("values last axis must align with times")
    return values + f.lambda_force * times**2 / 2.0


def map_ensemble_linear(ens, f: LinearForce):
    """Apply :func:`pathwise_map_linear` to a whole ensemble, keeping provenance."""
    from .sde import PathEnsemble

    shifted = pathwise_map_linear(ens.grid.times(), ens.values, f)
    return PathEnsemble(grid=ens.grid, values=shifted, seed=ens.seed, absorbed=ens.absorbed.copy())
