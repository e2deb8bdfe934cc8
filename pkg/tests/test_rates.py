import math

import numpy as np
import pytest

from bernsim.rates import (
    AffineRateModel,
    IsovectorDim,
    classify,
    hjb_potential,
    simulate_rate,
    to_bernstein,
    z_of_rate,
)
from bernsim.sde import PathEnsemble, TimeGrid, drift_estimate_stderr, estimate_drift, moments
from bernsim.solutions import Theta


def test_model_validation():
    with pytest.raises(ValueError):
        AffineRateModel(alpha=0.0, beta=0.0, phi=1.0, lambda_mr=1.0)
    with pytest.raises(ValueError):
        AffineRateModel(alpha=1.0, beta=-0.1, phi=1.0, lambda_mr=1.0)


def test_to_bernstein_worked_example():
    img = to_bernstein(AffineRateModel(alpha=2.0, beta=0.0, phi=1.0, lambda_mr=3.0))
    assert img.theta.value == 1.0
    assert img.phi_tilde == 1.0
    assert img.inv_sq_A == -0.125
    assert img.quad_B == 1.125
    assert img.drift_c1 == 0.5
    assert img.drift_c2 == -1.5


def test_to_bernstein_special_cases():
    at_root = AffineRateModel(alpha=1.6, beta=0.0, phi=0.25 * 1.6, lambda_mr=0.9)
    assert to_bernstein(at_root).inv_sq_A == 0.0
    no_reversion = AffineRateModel(alpha=1.0, beta=0.3, phi=0.1, lambda_mr=0.0)
    img = to_bernstein(no_reversion)
    assert img.quad_B == 0.0
    assert img.drift_c2 == 0.0


def test_classify_worked_examples():
    assert classify(AffineRateModel(1.0, 0.0, 0.25, 1.0)) is IsovectorDim.SIX
    assert classify(AffineRateModel(2.0, 0.0, 1.0, 3.0)) is IsovectorDim.FOUR
    assert classify(AffineRateModel(1.0, 0.0, 0.75, 0.0)) is IsovectorDim.SIX


def test_classify_exact_roots_short_circuit():
    m = AffineRateModel(alpha=1.3, beta=0.0, phi=0.75 * 1.3, lambda_mr=-1.1)
    assert classify(m, tol=0.0) is IsovectorDim.SIX
    with pytest.raises(ValueError):
        classify(m, tol=-1.0)


def test_classify_dichotomy_random_sweep():
    rng = np.random.default_rng(0)
    for _ in range(200):
        alpha = float(rng.uniform(0.1, 5.0))
        beta = float(rng.uniform(0.0, 2.0))
        lam = float(rng.uniform(-2.0, 2.0))
        phi = float(rng.uniform(-2.0, 2.0))
        m = AffineRateModel(alpha, beta, phi, lam)
        margin = min(abs(m.phi_tilde - 0.25 * alpha), abs(m.phi_tilde - 0.75 * alpha))
        if margin <= 1e-6 * alpha:
            continue
        assert classify(m) is IsovectorDim.FOUR
    for i in range(20):
        alpha = float(rng.uniform(0.1, 5.0))
        phi = (0.25 if i % 2 else 0.75) * alpha
        m = AffineRateModel(alpha, 0.0, phi, float(rng.uniform(-2.0, 2.0)))
        assert classify(m) is IsovectorDim.SIX


def test_hjb_potential_trivial_and_quadratic():
    th = Theta(1.0)
    zero = hjb_potential(0.0, 0.0, th)
    assert (zero.inv_sq, zero.quad, zero.lin, zero.const) == (0.0, 0.0, 0.0, 0.0)
    lam = 1.7
    pot = hjb_potential(0.0, -lam / 2.0, th)
    assert pot.quad == lam**2 / 8.0


def test_hjb_potential_closes_the_loop():
    # extracting the potential from the mapped drift reproduces the mapped
    # potential coefficients: pure algebra, tight tolerance
    rng = np.random.default_rng(42)
    for _ in range(100):
        m = AffineRateModel(
            alpha=float(rng.uniform(0.1, 5.0)),
            beta=float(rng.uniform(0.0, 2.0)),
            phi=float(rng.uniform(-2.0, 2.0)),
            lambda_mr=float(rng.uniform(-2.0, 2.0)),
        )
        img = to_bernstein(m)
        pot = hjb_potential(img.drift_c1, img.drift_c2, img.theta)
        assert pot.quad == img.quad_B
        rel = 0.0 if pot.inv_sq == img.inv_sq_A else abs(pot.inv_sq - img.inv_sq_A) / abs(img.inv_sq_A)
        assert rel <= 1e-10


def test_simulate_rate_validation():
    grid = TimeGrid(0.0, 1.0, 10)
    m = AffineRateModel(2.0, 0.04, 0.06, 0.8)
    with pytest.raises(ValueError, match="r0"):
        simulate_rate(m, -1.0, grid, 10, 0)
    with pytest.raises(ValueError):
        simulate_rate(m, 0.05, grid, 0, 0)


def test_simulate_rate_mean_tracks_moment_ode_at_every_step():
    m = AffineRateModel(2.0, 0.04, 0.06, 0.8)
    r0, n = 0.05, 20_000
    grid = TimeGrid(0.0, 1.0, 400)
    ens = simulate_rate(m, r0, grid, n, 42)
    mean_inf = m.phi / m.lambda_mr
    times = grid.times()
    for step in range(1, grid.steps + 1):
        mom = moments(ens, step)
        exact = mean_inf + (r0 - mean_inf) * math.exp(-m.lambda_mr * times[step])
        assert abs(mom.mean - exact) <= 3.0 * math.sqrt(mom.variance / mom.count), step


def test_simulate_rate_driftless_mean_and_truncation():
    m = AffineRateModel(alpha=1.0, beta=0.2, phi=0.0, lambda_mr=0.0)
    grid = TimeGrid(0.0, 1.0, 200)
    n = 20_000
    ens = simulate_rate(m, 0.1, grid, n, 7)
    assert np.all(np.isfinite(ens.values))  # full truncation keeps paths finite
    mom = moments(ens, grid.steps)
    assert abs(mom.mean - 0.1) <= 3.0 * math.sqrt(mom.variance / mom.count)
    # the diffusion floor is actually exercised
    assert np.any(m.alpha * ens.values + m.beta < 0.0)


def test_simulate_rate_is_deterministic():
    m = AffineRateModel(2.0, 0.04, 0.06, 0.8)
    grid = TimeGrid(0.0, 0.5, 50)
    a = simulate_rate(m, 0.05, grid, 500, 3)
    b = simulate_rate(m, 0.05, grid, 500, 3)
    assert np.array_equal(a.values, b.values)


def test_z_of_rate_constant_rate():
    grid = TimeGrid(0.0, 1.0, 4)
    rens = PathEnsemble(grid=grid, values=np.zeros((3, 5)), seed=0)
    zens = z_of_rate(AffineRateModel(4.0, 1.0, 0.0, 0.0), rens)
    assert np.array_equal(zens.values, np.ones((3, 5)))
    assert np.all(zens.absorbed == -1)


def test_z_of_rate_absorbs_at_first_floor_crossing():
    grid = TimeGrid(0.0, 1.0, 4)
    values = np.array([[0.5, 0.2, -0.1, 0.3, 0.4]])  # alpha*r+beta dips below 0, then recovers
    rens = PathEnsemble(grid=grid, values=values, seed=0)
    zens = z_of_rate(AffineRateModel(1.0, 0.0, 0.0, 0.0), rens)
    assert zens.absorbed[0] == 2
    assert np.all(np.isfinite(zens.values[0, :2]))
    assert np.all(np.isnan(zens.values[0, 2:]))


def _binned_drift_check(m, r0, t_end, steps, n, step, bins, seed):
    grid = TimeGrid(0.0, t_end, steps)
    rens = simulate_rate(m, r0, grid, n, seed)
    img = to_bernstein(m)
    zens = z_of_rate(m, rens)
    zcol = zens.values[:, step]
    zfin = zcol[np.isfinite(zcol)]
    lo, hi = np.percentile(zfin, [10.0, 90.0])
    out = estimate_drift(zens, step, np.linspace(lo, hi, bins + 1))
    assert len(out) >= 3
    for b in out:
        oracle = float(img.drift(b.center))
        band = 3.0 * drift_estimate_stderr(img.theta, b.count, grid.dt)
        assert abs(b.estimate - oracle) <= band


def test_z_drift_matches_ito_map_generic_model():
    # inverse-square term present (dimension-four case)
    m = AffineRateModel(2.0, 0.04, 0.06, 0.8)
    _binned_drift_check(m, r0=0.05, t_end=0.5, steps=500, n=20_000, step=300, bins=8, seed=42)


def test_z_drift_matches_ito_map_six_dimensional_model():
    # phi_tilde = alpha/4, so the inverse-square coefficient vanishes and the
    # drift is pure mean reversion
    m = AffineRateModel(2.0, 0.0, 0.5, 0.8)
    assert classify(m) is IsovectorDim.SIX
    _binned_drift_check(m, r0=0.5, t_end=0.5, steps=500, n=20_000, step=300, bins=8, seed=11)
