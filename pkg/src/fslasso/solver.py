"""Group-lasso solver for function-on-scalar regression.

Minimizes, over coefficient matrices B with one functional coefficient per
predictor row,

    0.5 * sum_n ||Y_n - X_n' B||^2  +  lam * sum_i w_i ||B_i||,

where all norms are taken in the Hilbert geometry of a :class:`Basis`.  The
scores are pre-multiplied by the Cholesky factor of the Gram matrix, so the
proximal step is the plain Euclidean block soft threshold for every geometry.

The solver is ADMM with the splitting z = beta: a ridge solve against a
cached Cholesky factorization, a row-wise group soft threshold, and a dual
update, with residual-balancing adaptation of the augmented-Lagrangian
parameter.  A fit is declared converged only once the subgradient optimality
conditions hold to the configured tolerances, so the reported sparsity
pattern can be trusted; the estimate itself is the z iterate, which is
exactly sparse.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import Basis
from .validation import as_float_matrix, as_float_vector, check_consistent_rows

# Certification thresholds for declaring convergence (see KktReport).
KKT_ACTIVE_TOL = 1e-4
KKT_INACTIVE_TOL = 1e-6
_KKT_SAFETY = 0.5
_EPS_FLOOR = 1e-15
_RHO_BALANCE = 10.0
_RHO_FACTOR = 2.0
_SCREEN_MIN_SIZE = 100
_SCREEN_MAX_ROUNDS = 20


@dataclass
class FitConfig:
    """Solver settings for one penalized fit.

    ``weights=None`` means all ones (the plain, non-adaptive penalty).
    Weights may be ``+inf``; those predictors are removed before solving and
    their coefficient rows are exactly zero in the result.
    """

    lam: float = 1.0
    weights: np.ndarray | None = None
    admm_rho: float = 1.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    max_iter: int = 10000
    warm_start: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("eps_abs and eps_rel must be positive")
        if self.admm_rho <= 0:
            raise ValueError("admm_rho must be positive")


@dataclass(frozen=True)
class KktReport:
    """Subgradient optimality residuals of a fit.

    ``max_active_residual``: largest norm, over nonzero rows, of the
    stationarity expression ``-X_i'(Y - X B) + lam w_i B_i / ||B_i||``.
    ``max_inactive_slack_violation``: largest positive part, over zero rows
    with finite weight, of ``||X_i'(Y - X B)|| - lam w_i``.
    """

    max_active_residual: float
    max_inactive_slack_violation: float

    def satisfied(self, lam, active_tol=KKT_ACTIVE_TOL, inactive_tol=KKT_INACTIVE_TOL):
        return (
            self.max_active_residual <= active_tol * max(lam, 1.0)
            and self.max_inactive_slack_violation <= inactive_tol
        )


@dataclass
class FitResult:
    """Coefficients and bookkeeping for one (lam, weights) fit."""

    B_hat: np.ndarray
    support: np.ndarray
    row_norms: np.ndarray
    objective: float
    kkt: KktReport
    iterations: int
    converged: bool
    wall_time: float
    lam: float


def _as_weights(weights, I):
    if weights is None:
        return np.ones(I)
    w = as_float_vector(weights, "weights", allow_inf=True)
    if w.size != I:
        raise ValueError(f"expected {I} weights, got {w.size}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return w


def lambda_max(Y, X, basis: Basis, weights=None) -> float:
    """Smallest penalty level at which the zero solution is optimal.

    From the inactive-slack condition: ``max_i ||X_i' Y|| / w_i`` over
    predictors with finite weight.
    """
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)
    w = _as_weights(weights, X.shape[1])
    finite = np.isfinite(w)
    if not np.any(finite):
        raise ValueError("all weights are infinite; no predictor can enter")
    grad_norms = np.linalg.norm(X.T @ (Y @ basis.gram_cholesky), axis=1)
    with np.errstate(divide="ignore"):
        vals = grad_norms[finite] / w[finite]
    return float(np.max(vals))


def kkt_check(B_hat, Y, X, basis: Basis, lam: float, weights=None) -> KktReport:
    """Evaluate the optimality conditions of a candidate solution.

    Rows with infinite weight must be zero and are skipped.
    """
    B_hat = as_float_matrix(B_hat, "B_hat")
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    w = _as_weights(weights, X.shape[1])
    L = basis.gram_cholesky
    Bw = B_hat @ L
    norms = np.linalg.norm(Bw, axis=1)
    infinite = ~np.isfinite(w)
    if np.any(norms[infinite] > 0):
        raise ValueError("excluded predictor has nonzero coefficient")
    G = X.T @ ((Y - X @ B_hat) @ L)  # one row per predictor, whitened
    active = norms > 0
    max_active = 0.0
    if np.any(active):
        stat = -G[active] + lam * (w[active] / norms[active])[:, None] * Bw[active]
        max_active = float(np.max(np.linalg.norm(stat, axis=1)))
    inactive = ~active & ~infinite
    max_inactive = 0.0
    if np.any(inactive):
        slack = np.linalg.norm(G[inactive], axis=1) - lam * w[inactive]
        max_inactive = float(max(0.0, np.max(slack)))
    return KktReport(max_active, max_inactive)


def _group_soft_threshold(M, kappa):
    """Row-wise prox of ``kappa_i * ||.||``: exact zeros below the threshold."""
    rn = np.linalg.norm(M, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = 1.0 - kappa / rn
    shrink = np.where(rn > 0, np.maximum(shrink, 0.0), 0.0)
    return M * shrink[:, None]


def _kkt_rows(G, Z, lam, w, row_scale=None):
    """(max active residual, max inactive slack violation) from gradient rows.

    ``row_scale`` re-expresses per-row numbers in a rescaled
    parameterization, as used by the adaptive change of variables.
    """
    norms = np.linalg.norm(Z, axis=1)
    active = norms > 0
    max_active = 0.0
    if np.any(active):
        stat = -G[active] + lam * (w[active] / norms[active])[:, None] * Z[active]
        rows = np.linalg.norm(stat, axis=1)
        if row_scale is not None:
            rows = rows * row_scale[active]
        max_active = float(np.max(rows))
    max_inactive = 0.0
    if np.any(~active):
        slack = np.linalg.norm(G[~active], axis=1) - lam * w[~active]
        if row_scale is not None:
            slack = slack * row_scale[~active]
        max_inactive = float(max(0.0, np.max(slack)))
    return max_active, max_inactive


class GroupLassoWorkspace:
    """Shared state for repeated solves against one (X, Y, basis) triple.

    Caches X'X, the whitened X'Y, and one Cholesky factorization per distinct
    augmented-Lagrangian parameter, so warm-started path fits avoid all
    refactorization.  Read-only after construction except for the factor
    cache; intended for sequential use within one path worker.
    """

    def __init__(self, X, Y, basis: Basis):
        X = as_float_matrix(X, "X")
        Y = as_float_matrix(Y, "Y")
        check_consistent_rows(X, Y)
        if Y.shape[1] != basis.K:
            raise ValueError("score columns do not match basis dimension")
        self.X = X
        self.basis = basis
        self.Yw = Y @ basis.gram_cholesky
        self.XtX = X.T @ X
        self.XtY = self.X.T @ self.Yw
        self.I = X.shape[1]
        self.K = Y.shape[1]
        self._factors = {}

    def _factor(self, rho):
        f = self._factors.get(rho)
        if f is None:
            f = scipy.linalg.cho_factor(self.XtX + rho * np.eye(self.I), lower=True)
            self._factors[rho] = f
        return f

    def grad_norms_at_zero(self):
        return np.linalg.norm(self.XtY, axis=1)

    def objective(self, Z, lam, w):
        resid = self.Yw - self.X @ Z
        return 0.5 * float(np.sum(resid**2)) + lam * float(
            w @ np.linalg.norm(Z, axis=1)
        )

    def _grad_at(self, Z):
        """Whitened gradient rows ``X'Y - X'X Z``, exploiting row sparsity."""
        nz = np.flatnonzero(np.any(Z != 0, axis=1))
        if nz.size == 0:
            return self.XtY.copy()
        return self.XtY - self.XtX[:, nz] @ Z[nz]

    def _admm(self, XtX, XtY, lam, w, Z, U, rho, cfg, act_tol, inact_tol,
              row_scale, factor, max_iter):
        """Core ADMM loop on one (sub)problem; mutates and returns Z, U, rho."""
        eps_abs, eps_rel = cfg.eps_abs, cfg.eps_rel
        sqrt_dim = np.sqrt(Z.size)
        kkt_every = 0
        converged = False
        iterations = 0
        kkt_numbers = None
        for it in range(1, max_iter + 1):
            iterations = it
            B = scipy.linalg.cho_solve(factor(rho), XtY + rho * (Z - U))
            Z_old = Z
            Z = _group_soft_threshold(B + U, lam * w / rho)
            U = U + B - Z
            r_norm = np.linalg.norm(B - Z)
            s_norm = rho * np.linalg.norm(Z - Z_old)
            eps_pri = sqrt_dim * eps_abs + eps_rel * max(
                np.linalg.norm(B), np.linalg.norm(Z)
            )
            eps_dual = sqrt_dim * eps_abs + eps_rel * rho * np.linalg.norm(U)
            check_kkt = (r_norm <= eps_pri and s_norm <= eps_dual) or (
                kkt_every and it % kkt_every == 0
            )
            if check_kkt:
                kkt_numbers = _kkt_rows(XtY - XtX @ Z, Z, lam, w, row_scale)
                if kkt_numbers[0] <= act_tol and kkt_numbers[1] <= inact_tol:
                    converged = True
                    break
                # residuals converged but optimality not yet certified
                eps_abs = max(eps_abs * 0.1, _EPS_FLOOR)
                eps_rel = max(eps_rel * 0.1, _EPS_FLOOR)
                kkt_every = 200
            if r_norm > _RHO_BALANCE * s_norm:
                rho *= _RHO_FACTOR
                U = U / _RHO_FACTOR
            elif s_norm > _RHO_BALANCE * r_norm:
                rho /= _RHO_FACTOR
                U = U * _RHO_FACTOR
        if kkt_numbers is None:
            kkt_numbers = _kkt_rows(XtY - XtX @ Z, Z, lam, w, row_scale)
        return Z, U, rho, iterations, converged, kkt_numbers

    def solve(self, lam, weights=None, cfg: FitConfig | None = None, state=None,
              cert_row_scale=None, screen=False, prev_lam=None):
        """Run ADMM; returns ``(Z, info)`` with Z exactly sparse.

        ``state`` is an optional ``(Z, U, rho)`` warm start from a previous
        solve, e.g. the neighboring point on a regularization path.
        ``cert_row_scale`` rescales the per-row optimality residuals before
        they are compared against the convergence-certificate tolerances; the
        adaptive stage passes its weights here so the certificate holds in
        the original parameterization.

        With ``screen=True`` the solve runs on a working set chosen by the
        sequential strong rule (``prev_lam`` is the neighboring penalty), and
        the full-problem optimality conditions are then verified; violating
        predictors are added and the solve repeats, so screening never
        changes the solution, only the cost.  ``info`` carries iterations,
        the convergence flag, the final ADMM state, and the certified
        optimality numbers.
        """
        cfg = cfg or FitConfig(lam=lam)
        w = _as_weights(weights, self.I)
        if not np.all(np.isfinite(w)):
            raise ValueError("workspace solves require finite weights; drop columns first")
        I, K = self.I, self.K
        if state is not None:
            Z, U, rho = state
            Z = Z.copy()
            U = U.copy()
        else:
            rho = cfg.admm_rho
            Z = np.zeros((I, K)) if cfg.warm_start is None else cfg.warm_start @ self.basis.gram_cholesky
            U = np.zeros((I, K))

        act_tol = _KKT_SAFETY * KKT_ACTIVE_TOL * max(lam, 1.0)
        inact_tol = _KKT_SAFETY * KKT_INACTIVE_TOL
        scale = cert_row_scale if cert_row_scale is not None else np.ones(I)

        if not screen or I <= _SCREEN_MIN_SIZE:
            Z, U, rho, iterations, converged, kkt_numbers = self._admm(
                self.XtX, self.XtY, lam, w, Z, U, rho, cfg, act_tol, inact_tol,
                scale, self._factor, cfg.max_iter,
            )
            info = {
                "iterations": iterations,
                "converged": converged,
                "state": (Z, U, rho),
                "kkt": KktReport(*kkt_numbers),
            }
            return Z, info

        # sequential strong rule on the warm-start gradient, plus its support
        grad = self._grad_at(Z)
        margin = 2.0 * lam - (prev_lam if prev_lam is not None else lam)
        keep = np.linalg.norm(grad, axis=1) >= w * margin
        keep |= np.any(Z != 0, axis=1)
        if not np.any(keep):
            with np.errstate(divide="ignore"):
                strength = np.linalg.norm(grad, axis=1) / np.where(w > 0, w, np.inf)
            keep[int(np.argmax(strength))] = True
        if np.all(keep):
            Z, U, rho, iterations, converged, kkt_numbers = self._admm(
                self.XtX, self.XtY, lam, w, Z, U, rho, cfg, act_tol, inact_tol,
                scale, self._factor, cfg.max_iter,
            )
            info = {
                "iterations": iterations,
                "converged": converged,
                "state": (Z, U, rho),
                "kkt": KktReport(*kkt_numbers),
            }
            return Z, info

        iterations = 0
        converged = False
        for _ in range(_SCREEN_MAX_ROUNDS):
            S = np.flatnonzero(keep)
            XtX_S = self.XtX[np.ix_(S, S)]
            factors = {}

            def factor(r, _M=XtX_S, _f=factors, _n=S.size):
                if r not in _f:
                    _f[r] = scipy.linalg.cho_factor(_M + r * np.eye(_n), lower=True)
                return _f[r]

            Z_S, U_S, rho, it_used, ok, _ = self._admm(
                XtX_S, self.XtY[S], lam, w[S], Z[S], U[S], rho, cfg, act_tol,
                inact_tol, scale[S], factor, max(cfg.max_iter - iterations, 1),
            )
            iterations += it_used
            Z = np.zeros((I, K))
            Z[S] = Z_S
            U[S] = U_S
            grad = self._grad_at(Z)
            kkt_numbers = _kkt_rows(grad, Z, lam, w, scale)
            if kkt_numbers[0] <= act_tol and kkt_numbers[1] <= inact_tol:
                converged = ok
                break
            if not ok:  # ran out of iterations inside the working set
                break
            violations = (np.linalg.norm(grad, axis=1) - lam * w) * scale > 0.0
            violations &= ~keep
            if not np.any(violations):
                # working set is consistent yet certification failed: give the
                # full problem whatever iteration budget remains
                Z, U, rho, it_used, converged, kkt_numbers = self._admm(
                    self.XtX, self.XtY, lam, w, Z, U, rho, cfg, act_tol,
                    inact_tol, scale, self._factor, max(cfg.max_iter - iterations, 1),
                )
                iterations += it_used
                break
            keep |= violations
        # dual rows outside the working set track the gradient for warm starts
        outside = ~keep
        if np.any(outside):
            U[outside] = grad[outside] / rho
        info = {
            "iterations": iterations,
            "converged": converged,
            "state": (Z, U, rho),
            "kkt": KktReport(*kkt_numbers),
        }
        return Z, info


def fit_group_lasso(Y, X, basis: Basis, cfg: FitConfig, cert_row_scale=None) -> FitResult:
    """Penalized fit of outcome scores on a scalar design.

    ``Y`` holds one outcome per row, as coefficients in ``basis``; ``X`` is
    the N-by-I design.  Predictors with infinite weight are removed before
    solving and reassembled as exact zero rows.  Non-convergence at
    ``max_iter`` returns a flagged result rather than raising.
    """
    t0 = time.perf_counter()
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)
    I = X.shape[1]
    w = _as_weights(cfg.weights, I)
    finite = np.isfinite(w)

    if not np.any(finite):
        B_hat = np.zeros((I, basis.K))
        return _finish_result(B_hat, Y, X, basis, cfg.lam, w, 0, True, t0)

    warm = None
    if cfg.warm_start is not None:
        warm = as_float_matrix(cfg.warm_start, "warm_start")[finite]
    sub_cfg = FitConfig(
        lam=cfg.lam,
        admm_rho=cfg.admm_rho,
        eps_abs=cfg.eps_abs,
        eps_rel=cfg.eps_rel,
        max_iter=cfg.max_iter,
        warm_start=warm,
    )
    ws = GroupLassoWorkspace(X[:, finite], Y, basis)
    Zw, info = ws.solve(cfg.lam, w[finite], sub_cfg, cert_row_scale=cert_row_scale, screen=True)
    B_hat = np.zeros((I, basis.K))
    B_hat[finite] = basis.unwhiten(Zw)
    return _finish_result(
        B_hat, Y, X, basis, cfg.lam, w, info["iterations"], info["converged"], t0
    )


def _finish_result(B_hat, Y, X, basis, lam, w, iterations, converged, t0) -> FitResult:
    norms = basis.row_norms(B_hat)
    support = np.flatnonzero(norms > 0)
    resid_w = (Y - X @ B_hat) @ basis.gram_cholesky
    finite = np.isfinite(w)
    objective = 0.5 * float(np.sum(resid_w**2)) + lam * float(w[finite] @ norms[finite])
    report = kkt_check(B_hat, Y, X, basis, lam, w)
    return FitResult(
        B_hat=B_hat,
        support=support,
        row_norms=norms,
        objective=objective,
        kkt=report,
        iterations=iterations,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        lam=lam,
    )


def fit_fsl(Y, X, basis: Basis, lam: float, **solver_kwargs) -> FitResult:
    """Non-adaptive fit: unit weight on every predictor."""
    return fit_group_lasso(Y, X, basis, FitConfig(lam=lam, **solver_kwargs))


def adaptive_weights(fsl_result: FitResult) -> np.ndarray:
    """Data-driven weights: reciprocal norms of a preliminary fit.

    Zero rows get infinite weight, which drops the predictor from the
    adaptive stage entirely.
    """
    with np.errstate(divide="ignore"):
        return np.where(fsl_result.row_norms > 0, 1.0 / fsl_result.row_norms, np.inf)


def fit_with_weights(
    Y, X, basis: Basis, lam: float, weights, warm_start=None, **solver_kwargs
) -> FitResult:
    """Weighted fit via the change of variables ``alpha_i = w_i * beta_i``.

    Infinite-weight predictors are dropped, the remaining columns are scaled
    by the reciprocal weights so the transformed problem has unit weights,
    and the solution is mapped back.  The optimality report is evaluated in
    the original parameterization with the original weights.
    """
    t0 = time.perf_counter()
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    I = X.shape[1]
    w = _as_weights(weights, I)
    finite = np.isfinite(w)
    if not np.any(finite):
        return _finish_result(np.zeros((I, basis.K)), Y, X, basis, lam, w, 0, True, t0)

    wf = w[finite]
    X_scaled = X[:, finite] / wf[None, :]
    alpha_warm = None
    if warm_start is not None:
        alpha_warm = as_float_matrix(warm_start, "warm_start")[finite] * wf[:, None]
    inner = fit_group_lasso(
        Y,
        X_scaled,
        basis,
        FitConfig(lam=lam, warm_start=alpha_warm, **solver_kwargs),
        cert_row_scale=wf,
    )
    B_hat = np.zeros((I, basis.K))
    B_hat[finite] = inner.B_hat / wf[:, None]
    return _finish_result(B_hat, Y, X, basis, lam, w, inner.iterations, inner.converged, t0)


def fit_afsl(
    Y, X, basis: Basis, lam_fsl: float, lam_afsl: float, **solver_kwargs
) -> tuple[FitResult, FitResult]:
    """Two-stage adaptive fit; returns ``(initial_fit, adaptive_fit)``."""
    fsl = fit_fsl(Y, X, basis, lam_fsl, **solver_kwargs)
    w = adaptive_weights(fsl)
    afsl = fit_with_weights(
        Y, X, basis, lam_afsl, w, warm_start=fsl.B_hat, **solver_kwargs
    )
    return fsl, afsl


def closed_form_orthogonal(Y, X, basis: Basis, cfg: FitConfig) -> np.ndarray:
    """Exact solution under an orthogonal design: soft-thresholded least squares.

    Requires ``X'X / N`` to equal the identity to within 1e-8.  Row i of the
    solution is ``(1 - lam w_i / (N ||b_i||))^+ b_i`` where ``b_i`` is the
    least-squares row ``X_i'Y / N``.
    """
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)
    N, I = X.shape
    if np.max(np.abs(X.T @ X / N - np.eye(I))) > 1e-8:
        raise ValueError("design is not orthogonal: X'X / N must be the identity")
    w = _as_weights(cfg.weights, I)
    B_ls = X.T @ Y / N
    norms = basis.row_norms(B_ls)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = 1.0 - (cfg.lam * w / N) / norms
    scale = np.where((norms > 0) & np.isfinite(w), np.maximum(scale, 0.0), 0.0)
    return B_ls * scale[:, None]


def oracle_estimator(Y, X, support_true, basis: Basis) -> np.ndarray:
    """Least squares restricted to the true support, zeros elsewhere."""
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)
    support = np.asarray(support_true, dtype=int)
    B = np.zeros((X.shape[1], Y.shape[1]))
    if support.size == 0:
        return B
    X1 = X[:, support]
    try:
        cho = scipy.linalg.cho_factor(X1.T @ X1, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("true-support design is rank deficient") from exc
    B[support] = scipy.linalg.cho_solve(cho, X1.T @ Y)
    return B


def residual_sum_squares(Y, X, B, basis: Basis) -> float:
    """Sum over observations of the squared Hilbert-norm residuals."""
    resid = (as_float_matrix(Y, "Y") - as_float_matrix(X, "X") @ B) @ basis.gram_cholesky
    return float(np.sum(resid**2))
