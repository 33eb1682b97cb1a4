import numpy as np
import pytest

from conftest import assert_kkt_ok
from fslasso.basis import identity_basis
from fslasso.simulate import ScenarioConfig, generate_scenario
from fslasso.solver import fit_fsl, lambda_max, residual_sum_squares
from fslasso.tuning import (
    PathConfig,
    criterion_value,
    information_criteria,
    lambda_path,
    select_fsl_afsl,
    select_model,
)


def _toy_problem(rng, N=80, I=12, K=3, signal=4, noise=0.3):
    X = rng.standard_normal((N, I))
    B = np.zeros((I, K))
    B[:signal] = rng.standard_normal((signal, K))
    Y = X @ B + noise * rng.standard_normal((N, K))
    return Y, X, identity_basis(K)


def test_lambda_path_endpoints(rng):
    Y, X, basis = _toy_problem(rng)
    lam_max = lambda_max(Y, X, basis)
    Y_scaled = Y * (10.0 / lam_max)
    grid = lambda_path(Y_scaled, X, basis, cfg=PathConfig(n_lambda=2, lambda_min_ratio=0.1))
    np.testing.assert_allclose(grid, [10.0, 1.0], rtol=1e-12)


def test_lambda_path_log_even(rng):
    Y, X, basis = _toy_problem(rng)
    grid = lambda_path(Y, X, basis, cfg=PathConfig(n_lambda=25, lambda_min_ratio=1e-3))
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    assert np.all(np.diff(grid) < 0)


def test_fit_at_path_start_is_empty(rng):
    Y, X, basis = _toy_problem(rng)
    grid = lambda_path(Y, X, basis, cfg=PathConfig(n_lambda=5, lambda_min_ratio=0.1))
    fit = fit_fsl(Y, X, basis, grid[0])
    assert fit.support.size == 0


def test_lambda_path_all_infinite_weights(rng):
    Y, X, basis = _toy_problem(rng)
    with pytest.raises(ValueError, match="infinite"):
        lambda_path(Y, X, basis, weights=np.full(X.shape[1], np.inf))


def test_information_criteria_identities(rng):
    # df = 0 kills the EBIC extra term; gamma = 0 is an exact identity
    bic, ebic = information_criteria(10.0, 0, 50, 200, gamma=0.2)
    assert bic == ebic
    for _ in range(5):
        rss = rng.uniform(0.5, 20.0)
        df = int(rng.integers(0, 10))
        b, e = information_criteria(rss, df, 100, 500, gamma=0.0)
        assert b == e


def test_criterion_prefers_smaller_support_at_equal_rss():
    b3, _ = information_criteria(5.0, 3, 100, 50, 0.2)
    b5, _ = information_criteria(5.0, 5, 100, 50, 0.2)
    assert b3 < b5
    _, e3 = information_criteria(5.0, 3, 100, 50, 0.2)
    _, e5 = information_criteria(5.0, 5, 100, 50, 0.2)
    assert e3 < e5


def test_zero_rss_sentinel():
    bic, ebic = information_criteria(0.0, 3, 100, 50, 0.2)
    assert bic == -np.inf and ebic == -np.inf


def test_criterion_value_recompute(rng):
    Y, X, basis = _toy_problem(rng)
    fit = fit_fsl(Y, X, basis, 0.3 * lambda_max(Y, X, basis))
    val = criterion_value(fit, Y, X, basis, "bic")
    rss = residual_sum_squares(Y, X, fit.B_hat, basis)
    N = Y.shape[0]
    assert val == pytest.approx(N * np.log(rss / N) + fit.support.size * np.log(N), rel=1e-12)


def test_path_rows_reproduce_criteria_from_serialized_values(rng, tmp_path):
    Y, X, basis = _toy_problem(rng)
    path, chosen = select_model(Y, X, basis, "fsl", PathConfig(n_lambda=12, lambda_min_ratio=0.05))
    for j, row in enumerate(path.rows()):
        bic, ebic = information_criteria(
            row["rss"], row["df"], Y.shape[0], X.shape[1], 0.2
        )
        assert row["bic"] == pytest.approx(bic, rel=1e-10)
        assert row["ebic"] == pytest.approx(ebic, rel=1e-10)
        # recompute RSS from the stored coefficients as well
        rss = residual_sum_squares(Y, X, path.fits[j].B_hat, basis)
        assert row["rss"] == pytest.approx(rss, rel=1e-10)


def test_path_fits_satisfy_kkt(rng):
    Y, X, basis = _toy_problem(rng)
    path, chosen = select_model(Y, X, basis, "fsl", PathConfig(n_lambda=20, lambda_min_ratio=1e-2))
    for fit in path.fits:
        assert_kkt_ok(fit, f"lam={fit.lam}")
    assert chosen is path.fits[path.selected_index]


def test_strong_signal_noiseless_selects_true_support(rng):
    N, I, K, signal = 100, 20, 3, 4
    X = rng.standard_normal((N, I))
    B = np.zeros((I, K))
    B[:signal] = 2.0 * rng.standard_normal((signal, K))
    Y = X @ B
    basis = identity_basis(K)
    for mode in ("fsl", "afsl"):
        path, chosen = select_model(
            Y, X, basis, mode, PathConfig(n_lambda=40, lambda_min_ratio=1e-4)
        )
        assert list(chosen.support) == list(range(signal)), mode


def test_pure_noise_ebic_mostly_selects_empty():
    reps = 50
    empty = 0
    cfg = PathConfig(n_lambda=30, lambda_min_ratio=0.01, criterion="ebic", ebic_gamma=0.2)
    for rep in range(reps):
        scen = ScenarioConfig(N=200, I=100, I0=0, grid_points=10, seed=101, replications=reps)
        ds = generate_scenario(scen, rep)
        basis = identity_basis(10)
        path, chosen = select_model(ds.Y, ds.X, basis, "fsl", cfg)
        if chosen.support.size == 0:
            empty += 1
    assert empty >= 0.9 * reps


def test_afsl_criteria_agree_on_most_replications():
    agree = 0
    reps = 8
    for rep in range(reps):
        scen = ScenarioConfig(N=150, I=60, I0=5, grid_points=12, seed=55, replications=reps)
        ds = generate_scenario(scen, rep)
        basis = identity_basis(12)
        supports = {}
        for criterion in ("bic", "ebic"):
            cfg = PathConfig(n_lambda=25, lambda_min_ratio=0.01, criterion=criterion)
            _, chosen = select_model(ds.Y, ds.X, basis, "afsl", cfg)
            supports[criterion] = tuple(chosen.support)
        if supports["bic"] == supports["ebic"]:
            agree += 1
    assert agree >= reps / 2


def test_empty_pilot_gives_zero_adaptive_fit(rng):
    # pure noise with a path floor high enough that nothing enters
    N, I, K = 50, 8, 2
    X = rng.standard_normal((N, I))
    Y = rng.standard_normal((N, K))
    basis = identity_basis(K)
    sel = select_fsl_afsl(Y, X, basis, PathConfig(n_lambda=3, lambda_min_ratio=0.95))
    if sel.fsl.support.size == 0:
        assert sel.afsl.support.size == 0
        assert np.all(sel.afsl.B_hat == 0.0)


def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(n_lambda=1)
    with pytest.raises(ValueError):
        PathConfig(lambda_min_ratio=1.5)
    with pytest.raises(ValueError):
        PathConfig(criterion="aic")
    with pytest.raises(ValueError):
        PathConfig(ebic_gamma=-0.1)
