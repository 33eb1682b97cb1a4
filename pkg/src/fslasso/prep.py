"""Turn discretely observed curves into functional objects.

Two steps, following standard FDA practice: penalized B-spline smoothing with
a single GCV-chosen smoothing parameter shared by all curves, then rotation
to the functional principal component basis retaining enough components to
explain a target fraction of variance (0.99 by default).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin

from . import bsplines
from .basis import Basis
from .validation import as_float_matrix, as_float_vector


def _default_gcv_grid():
    return np.geomspace(1e-8, 1e4, 50)


@dataclass
class SmoothingConfig:
    """Settings for penalized B-spline smoothing.

    ``n_basis`` is capped at ``4 * m`` when the observation grid has
    ``m < 30`` points; the requested and effective sizes are both recorded in
    CLI metadata.
    """

    n_basis: int = 100
    spline_order: int = 4
    knot_rule: str = "equal"
    penalty_order: int = 2
    gcv_grid: np.ndarray = field(default_factory=_default_gcv_grid)

    def __post_init__(self):
        if self.n_basis < self.spline_order:
            raise ValueError("n_basis must be at least spline_order")
        if self.knot_rule != "equal":
            raise ValueError("only equally spaced knots are supported")
        grid = as_float_vector(self.gcv_grid, "gcv_grid")
        if grid.size < 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValueError("gcv_grid must be positive and strictly increasing")
        self.gcv_grid = grid

    def effective_n_basis(self, n_points: int) -> int:
        if n_points < 30:
            return max(self.spline_order, min(self.n_basis, 4 * n_points))
        return self.n_basis


def build_bspline_basis(grid, cfg: SmoothingConfig | None = None) -> Basis:
    """B-spline basis on ``grid`` with the configured dimension cap applied."""
    cfg = cfg or SmoothingConfig()
    grid = as_float_vector(grid, "grid")
    n_basis = cfg.effective_n_basis(grid.size)
    return bsplines.bspline_basis(grid, n_basis, cfg.spline_order, cfg.penalty_order)


def smooth_curves(raw, basis: Basis, cfg: SmoothingConfig | None = None):
    """Fit penalized-spline coefficients to every curve with one pooled GCV.

    For each candidate ``mu`` the ridge system ``(Phi'Phi + mu P) c = Phi' y``
    is solved per curve, and the pooled criterion

        GCV(mu) = sum_n ||y_n - yhat_n||^2 / (m * (1 - tr(H_mu)/m))^2

    is minimized over the configured grid.  Returns ``(coeffs, mu)`` with one
    coefficient row per curve.
    """
    cfg = cfg or SmoothingConfig()
    raw = as_float_matrix(raw, "raw")
    if basis.phi is None:
        raise ValueError("basis has no evaluation matrix; build it on the observation grid")
    m = basis.grid.size
    if raw.shape[1] != m:
        raise ValueError(f"curves have {raw.shape[1]} points but the basis grid has {m}")

    phi = basis.phi
    A = phi.T @ phi
    rhs = phi.T @ raw.T  # K x N
    best = None
    for mu in cfg.gcv_grid:
        M = A + mu * basis.penalty
        try:
            cho = scipy.linalg.cho_factor(M, lower=True)
        except scipy.linalg.LinAlgError:
            continue
        coeffs = scipy.linalg.cho_solve(cho, rhs)
        fitted = phi @ coeffs
        rss = float(np.sum((raw.T - fitted) ** 2))
        trace_h = float(np.trace(scipy.linalg.cho_solve(cho, A)))
        denom = 1.0 - trace_h / m
        if denom <= 1e-10:
            continue
        gcv = rss / (m * denom * denom)
        if best is None or gcv < best[0]:
            best = (gcv, mu, coeffs.T.copy())
    if best is None:
        raise ValueError("GCV failed at every smoothing parameter in the grid")
    _, mu, coeffs = best
    return coeffs, float(mu)


@dataclass
class FpcaResult:
    """Outcome of the principal component rotation.

    ``components`` rows are orthonormal under the source-basis Gram matrix;
    ``eigenvalues`` is the full nonincreasing spectrum of the sample
    covariance; ``variance_explained`` holds the cumulative fractions for the
    retained components.
    """

    components: np.ndarray
    eigenvalues: np.ndarray
    variance_explained: np.ndarray
    mean_coeffs: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fpca(coeffs, basis: Basis, target_variance: float = 0.99):
    """Rotate coefficient rows to the functional principal component basis.

    Centers the data, eigendecomposes the sample covariance under the basis
    Gram matrix, and keeps the smallest number of components whose cumulative
    variance reaches ``target_variance``.  Returns
    ``(FpcaResult, scores, fpc_basis)`` where the scores have an identity
    Gram matrix.
    """
    coeffs = as_float_matrix(coeffs, "coeffs")
    N = coeffs.shape[0]
    if N < 2:
        raise ValueError("FPCA needs at least two curves")
    if not 0.0 < target_variance <= 1.0:
        raise ValueError("target_variance must be in (0, 1]")
    if coeffs.shape[1] != basis.K:
        raise ValueError("coefficient columns do not match basis dimension")

    mean = coeffs.mean(axis=0)
    centered = coeffs - mean
    L = basis.gram_cholesky
    cov = centered.T @ centered / (N - 1)
    M = L.T @ cov @ L
    eigvals, eigvecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    total = float(eigvals.sum())
    if total <= 0.0:
        raise ValueError("data have zero variance; nothing to rotate")
    cumulative = np.cumsum(eigvals) / total
    n_comp = int(np.searchsorted(cumulative, target_variance - 1e-12) + 1)
    n_comp = min(n_comp, basis.K)

    V = eigvecs[:, :n_comp]
    # deterministic sign: largest-magnitude loading is positive
    flip = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(n_comp)])
    flip[flip == 0] = 1.0
    V = V * flip
    components = scipy.linalg.solve_triangular(L, V, lower=True, trans="T").T
    scores = centered @ (basis.gram @ components.T)

    result = FpcaResult(
        components=components,
        eigenvalues=eigvals,
        variance_explained=cumulative[:n_comp],
        mean_coeffs=mean,
    )
    fpc_basis = Basis(
        "fpc",
        np.eye(n_comp),
        components @ basis.penalty @ components.T,
        grid=basis.grid,
        phi=None if basis.phi is None else basis.phi @ components.T,
    )
    return result, scores, fpc_basis


def fpca_back_project(scores, result: FpcaResult, add_mean: bool = True):
    """Map FPC scores back to source-basis coefficients."""
    coeffs = np.atleast_2d(scores) @ result.components
    if add_mean:
        coeffs = coeffs + result.mean_coeffs
    return coeffs


class BSplineSmoother(TransformerMixin, BaseEstimator):
    """Transformer wrapping :func:`smooth_curves` for pipeline use.

    Parameters mirror :class:`SmoothingConfig`; ``grid`` fixes the common
    observation grid the raw curves live on.
    """

    def __init__(self, grid=None, n_basis=100, spline_order=4, penalty_order=2, gcv_grid=None):
        self.grid = grid
        self.n_basis = n_basis
        self.spline_order = spline_order
        self.penalty_order = penalty_order
        self.gcv_grid = gcv_grid

    def _config(self):
        kwargs = dict(
            n_basis=self.n_basis,
            spline_order=self.spline_order,
            penalty_order=self.penalty_order,
        )
        if self.gcv_grid is not None:
            kwargs["gcv_grid"] = np.asarray(self.gcv_grid, dtype=float)
        return SmoothingConfig(**kwargs)

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X")
        if self.grid is None:
            grid = np.linspace(0.0, 1.0, X.shape[1])
        else:
            grid = as_float_vector(self.grid, "grid")
        cfg = self._config()
        self.config_ = cfg
        self.basis_ = build_bspline_basis(grid, cfg)
        _, self.mu_ = smooth_curves(X, self.basis_, cfg)
        return self

    def transform(self, X):
        X = as_float_matrix(X, "X")
        cfg = dataclasses.replace(self.config_, gcv_grid=np.asarray([self.mu_]))
        coeffs, _ = smooth_curves(X, self.basis_, cfg)
        return coeffs

    def fit_transform(self, X, y=None):
        self.fit(X)
        coeffs, _ = smooth_curves(X, self.basis_, dataclasses.replace(
            self.config_, gcv_grid=np.asarray([self.mu_])))
        return coeffs


class FunctionalPCA(TransformerMixin, BaseEstimator):
    """Transformer wrapping :func:`fpca`.

    ``transform`` maps source-basis coefficient rows to FPC scores;
    ``inverse_transform`` maps scores back (mean added).
    """

    def __init__(self, basis=None, target_variance=0.99):
        self.basis = basis
        self.target_variance = target_variance

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X")
        basis = self.basis
        if basis is None:
            from .basis import identity_basis

            basis = identity_basis(X.shape[1])
        self.result_, _, self.fpc_basis_ = fpca(X, basis, self.target_variance)
        self.source_basis_ = basis
        return self

    def transform(self, X):
        X = as_float_matrix(X, "X")
        centered = X - self.result_.mean_coeffs
        return centered @ (self.source_basis_.gram @ self.result_.components.T)

    def inverse_transform(self, scores):
        return fpca_back_project(scores, self.result_)
