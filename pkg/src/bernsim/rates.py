"""Bridge from the one-factor affine short-rate model to a Bernstein diffusion.

The rate follows

    dr = sqrt(alpha*r + beta) dw + (phi - lambda_mr*r) dt,

and the transformed variable z = sqrt(alpha*r + beta) is, by Ito's formula,

    dz = (alpha/2) dw + (c1/z + c2*z) dt,
    c1 = alpha*(phi_tilde - alpha/4)/2,  c2 = -lambda_mr/2,
    phi_tilde = phi + lambda_mr*beta/alpha,

i.e. a diffusion with scale theta = alpha/2.  Reading the drift as
theta**2 * d(log eta)/dq of a stationary positive backward-heat solution and
extracting the potential via V(q) = b(q)**2/2 + (theta**2/2)*b'(q) yields

    V(q) = A/q**2 + B*q**2,
    A = (alpha**2/8)*(phi_tilde - alpha/4)*(phi_tilde - 3*alpha/4),
    B = lambda_mr**2/8,

with the additive energy constant unidentifiable from the drift and reported
as zero.  The symmetry algebra of the equation has dimension 6 exactly when
A = 0, equivalently phi_tilde in {alpha/4, 3*alpha/4}, and dimension 4
otherwise.

:func:`hjb_potential` works on drift coefficients so the closure check
A == hjb(c1, c2, theta).inv_sq is exact algebra; the Monte Carlo route
(:func:`simulate_rate` with full-truncation Euler, :func:`z_of_rate`, then
binned drift estimation) is the independent statistical verification.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._rng import normals_for_step
from .sde import EPSILON_FLOOR, PathEnsemble, TimeGrid
from .solutions import PotentialSpec, Theta

__all__ = [
    "AffineRateModel",
    "BernsteinImage",
    "IsovectorDim",
    "CLASSIFY_TOL",
    "to_bernstein",
    "classify",
    "simulate_rate",
    "z_of_rate",
    "hjb_potential",
]

# Default scale-relative tolerance for the A = 0 classification; A scales
# like alpha**2 times the squared rate parameters.
CLASSIFY_TOL = 1e-12


@dataclass(frozen=True)
class AffineRateModel:
    """Constants of dr = sqrt(alpha*r + beta) dw + (phi - lambda_mr*r) dt."""

    alpha: float
    beta: float
    phi: float
    lambda_mr: float

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def phi_tilde(self) -> float:
        return self.phi + self.lambda_mr * self.beta / self.alpha


@dataclass(frozen=True)
class BernsteinImage:
    """Derived constants of the z = sqrt(alpha*r + beta) diffusion."""

    theta: Theta
    phi_tilde: float
    inv_sq_A: float
    quad_B: float
    drift_c1: float
    drift_c2: float

    def drift(self, q):
        """The process drift c1/q + c2*q (singular at q = 0)."""
        q = np.asarray(q, float)
        return self.drift_c1 / q + self.drift_c2 * q


class IsovectorDim(enum.Enum):
    """Dimension of the symmetry algebra of the transformed equation."""

    FOUR = 4
    SIX = 6


def to_bernstein(m: AffineRateModel) -> BernsteinImage:
    """Map rate-model constants to the z-diffusion constants."""
    alpha = m.alpha
    pt = m.phi_tilde
    return BernsteinImage(
        theta=Theta(alpha / 2.0),
        phi_tilde=pt,
        # + 0.0 keeps an exact root from surfacing as -0.0 in reports
        inv_sq_A=alpha**2 / 8.0 * (pt - 0.25 * alpha) * (pt - 0.75 * alpha) + 0.0,
        quad_B=m.lambda_mr**2 / 8.0,
        drift_c1=alpha * (pt - 0.25 * alpha) / 2.0,
        drift_c2=-m.lambda_mr / 2.0,
    )


def classify(m: AffineRateModel, tol: float = CLASSIFY_TOL) -> IsovectorDim:
    """Six iff the inverse-square coefficient vanishes (|A| <= tol * alpha**2).

    Inputs whose phi_tilde hits alpha/4 or 3*alpha/4 exactly in floating
    point short-circuit to Six regardless of tol.
    """
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    img = to_bernstein(m)
    pt, alpha = img.phi_tilde, m.alpha
    if pt - 0.25 * alpha == 0.0 or pt - 0.75 * alpha == 0.0:
        return IsovectorDim.SIX
    if abs(img.inv_sq_A) <= tol * alpha**2:
        return IsovectorDim.SIX
    return IsovectorDim.FOUR


def simulate_rate(
    m: AffineRateModel,
    r0: float,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
) -> PathEnsemble:
    """Full-truncation Euler for the rate: volatility sqrt(max(alpha*r+beta, 0)).

    The drift uses r as-is, so paths may dip below -beta/alpha and mean-revert
    back; no state is clamped.  Noise provenance matches :func:`bernsim.sde.simulate`.
    """
    if n_paths < 1:
        raise ValueError("need n_paths >= 1")
    if m.alpha * r0 + m.beta < 0.0:
        raise ValueError(f"invalid r0 = {r0}: alpha*r0 + beta must be nonnegative")
    times = grid.times()
    dt = grid.dt
    sqdt = np.sqrt(dt)
    values = np.empty((n_paths, grid.steps + 1))
    values[:, 0] = r0
    r = np.full(n_paths, float(r0))
    for k in range(grid.steps):
        xi = normals_for_step(seed, k, n_paths)
        vol = np.sqrt(np.maximum(m.alpha * r + m.beta, 0.0))
        r = r + (m.phi - m.lambda_mr * r) * dt + vol * sqdt * xi
        values[:, k + 1] = r
    return PathEnsemble(grid=grid, values=values, seed=int(seed))


def z_of_rate(m: AffineRateModel, ens: PathEnsemble) -> PathEnsemble:
    """Pointwise map z = sqrt(max(alpha*r + beta, 0)) of a rate ensemble.

    A path is marked absorbed at the first index where alpha*r + beta falls
    to EPSILON_FLOOR**2 or below (z indistinguishable from the singular
    point); entries from that index on are NaN.
    """
    if ens.values.ndim != 2:
        raise ValueError("rate ensemble has unexpected shape")
    arg = m.alpha * ens.values + m.beta
    dead = arg <= EPSILON_FLOOR**2
    np.logical_or.accumulate(dead, axis=1, out=dead)
    hit_any = dead[:, -1]
    first = np.where(hit_any, dead.argmax(axis=1), -1).astype(np.int64)
    # keep earlier absorption inherited from the rate ensemble
    inherited = ens.absorbed
    both = (first >= 0) & (inherited >= 0)
    absorbed = np.where(both, np.minimum(first, inherited), np.maximum(first, inherited))
    if np.any(inherited >= 0):
        cols = np.arange(ens.grid.steps + 1)
        dead |= (inherited >= 0)[:, None] & (cols[None, :] >= inherited[:, None])
    np.maximum(arg, 0.0, out=arg)
    np.sqrt(arg, out=arg)
    arg[dead] = np.nan
    return PathEnsemble(grid=ens.grid, values=arg, seed=ens.seed, absorbed=absorbed)


def hjb_potential(c1: float, c2: float, theta: Theta) -> PotentialSpec:
    """Potential of a stationary drift b(q) = c1/q + c2*q.

    Expands V(q) = b(q)**2/2 + (theta**2/2)*b'(q) and drops the additive
    energy constant (unidentifiable from the drift alone):

        inv_sq = (c1/2)*(c1 - theta**2),  quad = c2**2/2.
    """
    return PotentialSpec(
        inv_sq=(c1 / 2.0) * (c1 - theta.sq),
        quad=c2 * c2 / 2.0,
        lin=0.0,
        const=0.0,
    )
