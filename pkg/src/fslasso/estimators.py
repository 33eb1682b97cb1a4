"""Scikit-learn style estimators wrapping the solver and the tuning sweep.

These follow the fit/predict/get_params conventions so the method composes
with pipelines, cross-validation utilities, and the preprocessing
transformers in :mod:`fslasso.prep`.  ``X`` is the usual N-by-I scalar
design; ``Y`` is the N-by-K matrix of outcome coefficients in a declared
basis (identity geometry when no basis is given).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from . import solver, tuning
from .basis import identity_basis
from .validation import as_float_matrix, check_consistent_rows


def _resolve_basis(basis, Y):
    return identity_basis(Y.shape[1]) if basis is None else basis


class _FittedPredictorMixin:
    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError("estimator has not been fitted")
        X = as_float_matrix(X, "X")
        return X @ self.coef_


class FunctionalLasso(_FittedPredictorMixin, RegressorMixin, BaseEstimator):
    """Group-lasso regression of functional outcomes on scalar predictors.

    One penalty weight per predictor; weights of ``+inf`` exclude a predictor
    outright.  After ``fit``, ``coef_`` is the I-by-K coefficient matrix,
    ``support_`` the selected predictor indices, and ``result_`` the full
    solver record including the optimality report.
    """

    def __init__(
        self,
        lam=1.0,
        weights=None,
        basis=None,
        admm_rho=1.0,
        eps_abs=1e-6,
        eps_rel=1e-4,
        max_iter=10000,
    ):
        self.lam = lam
        self.weights = weights
        self.basis = basis
        self.admm_rho = admm_rho
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter

    def fit(self, X, Y):
        X = as_float_matrix(X, "X")
        Y = as_float_matrix(Y, "Y")
        check_consistent_rows(X, Y)
        basis = _resolve_basis(self.basis, Y)
        cfg = solver.FitConfig(
            lam=self.lam,
            weights=self.weights,
            admm_rho=self.admm_rho,
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iter=self.max_iter,
        )
        self.result_ = solver.fit_group_lasso(Y, X, basis, cfg)
        self.basis_ = basis
        self.coef_ = self.result_.B_hat
        self.support_ = self.result_.support
        self.n_iter_ = self.result_.iterations
        self.converged_ = self.result_.converged
        return self


class AdaptiveFunctionalLasso(_FittedPredictorMixin, RegressorMixin, BaseEstimator):
    """Two-stage adaptive fit: a pilot group lasso sets reciprocal-norm
    weights, then the reweighted problem is solved at ``lam``.

    ``lam_init`` is the pilot penalty level.  ``initial_result_`` holds the
    pilot fit, ``result_`` the adaptive one.
    """

    def __init__(
        self,
        lam=1.0,
        lam_init=1.0,
        basis=None,
        admm_rho=1.0,
        eps_abs=1e-6,
        eps_rel=1e-4,
        max_iter=10000,
    ):
        self.lam = lam
        self.lam_init = lam_init
        self.basis = basis
        self.admm_rho = admm_rho
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter

    def fit(self, X, Y):
        X = as_float_matrix(X, "X")
        Y = as_float_matrix(Y, "Y")
        check_consistent_rows(X, Y)
        basis = _resolve_basis(self.basis, Y)
        kwargs = dict(
            admm_rho=self.admm_rho,
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iter=self.max_iter,
        )
        fsl, afsl = solver.fit_afsl(Y, X, basis, self.lam_init, self.lam, **kwargs)
        self.basis_ = basis
        self.initial_result_ = fsl
        self.result_ = afsl
        self.weights_ = solver.adaptive_weights(fsl)
        self.coef_ = afsl.B_hat
        self.support_ = afsl.support
        self.converged_ = afsl.converged
        return self


class FunctionalLassoIC(_FittedPredictorMixin, RegressorMixin, BaseEstimator):
    """Path fit with information-criterion selection of the penalty level.

    ``mode="fsl"`` runs one warm-started path and picks the criterion
    minimizer; ``mode="afsl"`` additionally reweights by the selected pilot
    fit and sweeps a second path.  ``criterion`` is ``"bic"`` or ``"ebic"``.
    """

    def __init__(
        self,
        mode="afsl",
        criterion="bic",
        ebic_gamma=0.2,
        n_lambda=100,
        lambda_min_ratio=1e-3,
        basis=None,
        admm_rho=1.0,
        eps_abs=1e-6,
        eps_rel=1e-4,
        max_iter=10000,
    ):
        self.mode = mode
        self.criterion = criterion
        self.ebic_gamma = ebic_gamma
        self.n_lambda = n_lambda
        self.lambda_min_ratio = lambda_min_ratio
        self.basis = basis
        self.admm_rho = admm_rho
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter

    def fit(self, X, Y):
        X = as_float_matrix(X, "X")
        Y = as_float_matrix(Y, "Y")
        check_consistent_rows(X, Y)
        basis = _resolve_basis(self.basis, Y)
        cfg = tuning.PathConfig(
            n_lambda=self.n_lambda,
            lambda_min_ratio=self.lambda_min_ratio,
            criterion=self.criterion,
            ebic_gamma=self.ebic_gamma,
        )
        kwargs = dict(
            admm_rho=self.admm_rho,
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iter=self.max_iter,
        )
        path, chosen = tuning.select_model(Y, X, basis, mode=self.mode, cfg=cfg, **kwargs)
        self.basis_ = basis
        self.path_ = path
        self.result_ = chosen
        self.coef_ = chosen.B_hat
        self.support_ = chosen.support
        self.lam_ = chosen.lam
        return self
