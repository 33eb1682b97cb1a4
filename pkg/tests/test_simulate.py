import math

import numpy as np
import pytest

from fslasso.simulate import (
    MaternParams,
    ScenarioConfig,
    SimulatedDataset,
    generate_scenario,
    matern_cov,
    matern_cov_matrix,
    sample_design,
    sample_gp,
)

# frozen oracle values, computed independently from the covariance formulas
# at 30 digits (mpmath)
MATERN_ORACLE = [
    (2.5, 1.0, 0.25, 0.25, 0.52399410883182031),
    (1.5, 1.0, 1.0, 1.0, 0.48335772459650765),
    (2.5, 2.0, 0.5, 0.3, 1.537986218503236),
    (1.5, 0.7, 2.0, 0.9, 0.57131832965139929),
]


def _matern_reference(nu, sigma2, tau, d):
    # independent scalar-math evaluation used as the oracle
    r = d / tau
    if nu == 2.5:
        return sigma2 * (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r)
    return sigma2 * (1 + math.sqrt(3) * r) * math.exp(-math.sqrt(3) * r)


def test_matern_zero_distance():
    for nu in (1.5, 2.5):
        p = MaternParams(sigma2=3.7, tau=0.4, nu=nu)
        assert matern_cov(p, 0.3, 0.3) == pytest.approx(3.7, rel=1e-15)


@pytest.mark.parametrize("nu,sigma2,tau,d,expected", MATERN_ORACLE)
def test_matern_frozen_values(nu, sigma2, tau, d, expected):
    p = MaternParams(sigma2=sigma2, tau=tau, nu=nu)
    assert matern_cov(p, 0.0, d) == pytest.approx(expected, rel=1e-14)


def test_matern_random_points_match_reference(rng):
    for _ in range(100):
        nu = rng.choice([1.5, 2.5])
        sigma2 = rng.uniform(0.1, 5.0)
        tau = rng.uniform(0.05, 10.0)
        s, t = rng.uniform(0, 1, 2)
        p = MaternParams(sigma2=sigma2, tau=tau, nu=nu)
        val = matern_cov(p, s, t)
        assert val == pytest.approx(_matern_reference(nu, sigma2, tau, abs(s - t)), rel=1e-12)
        assert val == pytest.approx(matern_cov(p, t, s), rel=1e-15)


def test_matern_param_validation():
    with pytest.raises(ValueError):
        MaternParams(sigma2=-1.0)
    with pytest.raises(ValueError):
        MaternParams(tau=0.0)
    with pytest.raises(ValueError):
        MaternParams(nu=2.0)


def test_matern_matrix_psd_after_jitter():
    grid = np.linspace(0.0, 1.0, 80)
    for nu in (1.5, 2.5):
        p = MaternParams(sigma2=1.0, tau=0.25, nu=nu)
        C = matern_cov_matrix(p, grid)
        assert np.allclose(C, C.T)
        # sampling exercises the jittered factorization
        sample_gp(p, grid, 1, np.random.default_rng(0))


def test_sample_gp_determinism():
    p = MaternParams()
    grid = np.linspace(0.0, 1.0, 20)
    a = sample_gp(p, grid, 5, np.random.default_rng(42))
    b = sample_gp(p, grid, 5, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_sample_gp_scalar_variance_monte_carlo():
    p = MaternParams(sigma2=4.0, tau=0.5, nu=2.5)
    draws = sample_gp(p, np.array([0.3]), 100_000, np.random.default_rng(7))
    assert draws.shape == (100_000, 1)
    assert float(np.var(draws)) == pytest.approx(4.0, rel=0.05)


def test_sample_gp_covariance_monte_carlo():
    grid = np.linspace(0.0, 1.0, 10)
    p = MaternParams(sigma2=1.0, tau=0.25, nu=1.5)
    draws = sample_gp(p, grid, 10_000, np.random.default_rng(11))
    emp = draws.T @ draws / draws.shape[0]
    assert np.abs(emp - matern_cov_matrix(p, grid)).max() < 0.05


def test_sample_design_standardization(rng):
    X = sample_design(50, 7, 0.3, rng)
    np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(X.std(axis=0), 1.0, atol=1e-12)


def test_sample_design_correlation_extremes():
    rng = np.random.default_rng(3)
    X0 = sample_design(1000, 6, 0.0, rng)
    corr0 = np.corrcoef(X0, rowvar=False)
    assert np.abs(corr0 - np.eye(6)).max() <= 0.1

    X9 = sample_design(1000, 6, 0.99, np.random.default_rng(4))
    corr9 = np.corrcoef(X9, rowvar=False)
    assert np.diag(corr9, k=1).min() >= 0.95


def test_sample_design_validation(rng):
    with pytest.raises(ValueError):
        sample_design(10, 3, 1.0, rng)


def test_scenario_shapes_paper_grid():
    cfg = ScenarioConfig(N=500, I=500, I0=10, grid_points=50, seed=1)
    ds = generate_scenario(cfg, 0)
    assert ds.Y.shape == (500, 50)
    assert ds.X.shape == (500, 500)
    assert ds.beta_true.shape == (10, 50)
    assert list(ds.support_true) == list(range(10))


def test_scenario_determinism():
    cfg = ScenarioConfig(N=30, I=20, I0=4, grid_points=16, seed=9)
    a = generate_scenario(cfg, 3)
    b = generate_scenario(cfg, 3)
    assert np.array_equal(a.Y, b.Y)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.beta_true, b.beta_true)
    c = generate_scenario(cfg, 4)
    assert not np.array_equal(a.Y, c.Y)


def test_scenario_pure_noise_variance():
    cfg = ScenarioConfig(N=1000, I=5, I0=0, grid_points=12, seed=2, sigma2=1.0)
    ds = generate_scenario(cfg, 0)
    assert ds.beta_true.shape == (0, 12)
    pointwise_var = ds.Y.var(axis=0)
    assert np.all(np.abs(pointwise_var - 1.0) < 0.1)


def test_scenario_zero_noise_recovers_beta():
    cfg = ScenarioConfig(N=200, I=30, I0=5, grid_points=20, seed=6)
    ds = generate_scenario(cfg, 0, noise_scale=0.0)
    X1 = ds.X[:, :5]
    beta_hat = np.linalg.lstsq(X1, ds.Y, rcond=None)[0]
    np.testing.assert_allclose(beta_hat, ds.beta_true, atol=1e-8)


def test_beta_draws_smoother_than_errors():
    # nu=5/2 paths have visibly smaller curvature than nu=3/2 at matched scales
    grid = np.linspace(0.0, 1.0, 50)
    rng = np.random.default_rng(13)
    smooth = sample_gp(MaternParams(nu=2.5, tau=0.25), grid, 100, rng)
    rough = sample_gp(MaternParams(nu=1.5, tau=0.25), grid, 100, np.random.default_rng(14))
    msd = lambda A: float(np.mean(np.diff(A, n=2, axis=1) ** 2))
    assert msd(smooth) < msd(rough)


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(N=10, I=5, I0=6)
    with pytest.raises(ValueError):
        ScenarioConfig(grid_points=1)
    with pytest.raises(ValueError):
        ScenarioConfig(rho=1.0)
