import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fslasso.basis import identity_basis
from fslasso.estimators import AdaptiveFunctionalLasso, FunctionalLasso, FunctionalLassoIC
from fslasso.solver import lambda_max


def _easy_problem(rng, N=100, I=15, K=3, signal=4):
    X = rng.standard_normal((N, I))
    B = np.zeros((I, K))
    B[:signal] = 2.0 * rng.standard_normal((signal, K))
    Y = X @ B + 0.1 * rng.standard_normal((N, K))
    return X, Y, B


def test_functional_lasso_fit_predict(rng):
    X, Y, _ = _easy_problem(rng)
    lam = 0.3 * lambda_max(Y, X, identity_basis(3))
    est = FunctionalLasso(lam=lam).fit(X, Y)
    assert est.coef_.shape == (15, 3)
    assert est.converged_
    pred = est.predict(X)
    assert pred.shape == Y.shape
    np.testing.assert_allclose(pred, X @ est.coef_)


def test_functional_lasso_not_fitted():
    with pytest.raises(NotFittedError):
        FunctionalLasso().predict(np.ones((2, 3)))


def test_estimator_params_round_trip():
    est = FunctionalLasso(lam=2.5, max_iter=123)
    params = est.get_params()
    assert params["lam"] == 2.5 and params["max_iter"] == 123
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(lam=1.0)
    assert est.lam == 1.0


def test_adaptive_lasso_recovers_support(rng):
    X, Y, B = _easy_problem(rng)
    basis = identity_basis(3)
    lam0 = 0.2 * lambda_max(Y, X, basis)
    est = AdaptiveFunctionalLasso(lam=1.0, lam_init=lam0).fit(X, Y)
    assert set(est.support_.tolist()) == set(range(4))
    assert est.initial_result_.support.size >= est.support_.size
    assert np.isinf(est.weights_).sum() == 15 - est.initial_result_.support.size


def test_ic_estimator_selects_true_support(rng):
    X, Y, _ = _easy_problem(rng, N=150)
    for mode in ("fsl", "afsl"):
        est = FunctionalLassoIC(mode=mode, n_lambda=25, lambda_min_ratio=1e-3).fit(X, Y)
        assert set(est.support_.tolist()) == set(range(4)), mode
        assert est.lam_ == est.path_.lambdas[est.path_.selected_index]


def test_ic_estimator_criterion_validation(rng):
    X, Y, _ = _easy_problem(rng)
    with pytest.raises(ValueError):
        FunctionalLassoIC(criterion="cv").fit(X, Y)


def test_row_mismatch_raises(rng):
    X = rng.standard_normal((10, 3))
    Y = rng.standard_normal((11, 2))
    with pytest.raises(ValueError, match="same number of rows"):
        FunctionalLasso().fit(X, Y)
