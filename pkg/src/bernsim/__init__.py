"""Numerics for Bernstein diffusions of the backward heat equation.

Closed-form positive solutions and their drifts (:mod:`bernsim.solutions`),
exact potential/drift transforms (:mod:`bernsim.transforms`), reproducible
Euler-Maruyama path simulation with ensemble statistics (:mod:`bernsim.sde`),
the affine short-rate bridge (:mod:`bernsim.rates`), the verification battery
(:mod:`bernsim.verify`) and a batch CLI (:mod:`bernsim.cli`).
"""

from .rates import (
    AffineRateModel,
    BernsteinImage,
    IsovectorDim,
    classify,
    hjb_potential,
    simulate_rate,
    to_bernstein,
    z_of_rate,
)
from .sde import (
    DriftBin,
    DriftField,
    Guard,
    Moments,
    PathEnsemble,
    TimeGrid,
    compare_pathwise,
    drift_estimate_stderr,
    estimate_drift,
    moments,
    simulate,
)
from .solutions import (
    Constant,
    DomainError,
    Exponential,
    GridSpec,
    PositiveMixture,
    PositiveSolution,
    PotentialSpec,
    ReversedKernel,
    Theta,
    pde_residual,
    propagate_reverse,
    sample_on_grid,
)
from .transforms import (
    DriftRate,
    LinearForce,
    OscillatorFreq,
    TransformedSolution,
    linear_drift,
    linear_transform,
    map_ensemble_linear,
    ou_drift,
    ou_transform,
    pathwise_map_linear,
    quadratic_drift,
    quadratic_transform,
)

__version__ = "0.1.0"

__all__ = [
    "AffineRateModel",
    "BernsteinImage",
    "Constant",
    "DomainError",
    "DriftBin",
    "DriftField",
    "DriftRate",
    "Exponential",
    "GridSpec",
    "Guard",
    "IsovectorDim",
    "LinearForce",
    "Moments",
    "OscillatorFreq",
    "PathEnsemble",
    "PositiveMixture",
    "PositiveSolution",
    "PotentialSpec",
    "ReversedKernel",
    "Theta",
    "TimeGrid",
    "TransformedSolution",
    "classify",
    "compare_pathwise",
    "drift_estimate_stderr",
    "estimate_drift",
    "hjb_potential",
    "linear_drift",
    "linear_transform",
    "map_ensemble_linear",
    "moments",
    "ou_drift",
    "ou_transform",
    "pathwise_map_linear",
    "pde_residual",
    "propagate_reverse",
    "quadratic_drift",
    "quadratic_transform",
    "sample_on_grid",
    "simulate",
    "simulate_rate",
    "to_bernstein",
    "z_of_rate",
]
