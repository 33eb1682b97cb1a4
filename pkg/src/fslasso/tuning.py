"""Penalty-path construction and information-criterion model selection.

The path is a decreasing geometric grid anchored at the smallest penalty
that zeroes every coefficient, fitted with warm starts.  Selection uses

    BIC  = N log(RSS / N) + df log(N)
    EBIC = BIC + 2 gamma df log(I)

with RSS the summed squared Hilbert-norm residuals and df the number of
selected functional coefficients (groups, not scalar entries).  The adaptive
mode selects a pilot model first, forms reciprocal-norm weights, and sweeps
a second path over the reweighted problem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .basis import Basis
from .solver import (
    FitConfig,
    FitResult,
    GroupLassoWorkspace,
    adaptive_weights,
    kkt_check,
    lambda_max,
    residual_sum_squares,
)
from .validation import as_float_matrix, check_consistent_rows

CRITERIA = ("bic", "ebic")


@dataclass
class PathConfig:
    """Settings for one selection sweep."""

    n_lambda: int = 100
    lambda_min_ratio: float = 1e-3
    criterion: str = "bic"
    ebic_gamma: float = 0.2

    def __post_init__(self):
        if self.n_lambda < 2:
            raise ValueError("n_lambda must be at least 2")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError("lambda_min_ratio must be in (0, 1)")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.ebic_gamma < 0:
            raise ValueError("ebic_gamma must be nonnegative")


@dataclass
class PathResult:
    """Per-lambda fits and criterion values for one sweep."""

    lambdas: np.ndarray
    fits: list
    df: np.ndarray
    rss: np.ndarray
    bic: np.ndarray
    ebic: np.ndarray
    criterion: str
    selected_index: int

    @property
    def criterion_values(self) -> np.ndarray:
        return self.bic if self.criterion == "bic" else self.ebic

    @property
    def selected(self) -> FitResult:
        return self.fits[self.selected_index]

    def rows(self):
        """One dict per path point, matching the CSV schema in the README."""
        out = []
        for j, fit in enumerate(self.fits):
            out.append(
                {
                    "lambda": float(self.lambdas[j]),
                    "df": int(self.df[j]),
                    "rss": float(self.rss[j]),
                    "bic": float(self.bic[j]),
                    "ebic": float(self.ebic[j]),
                    "converged": int(fit.converged),
                    "iterations": int(fit.iterations),
                    "wall_time": float(fit.wall_time),
                }
            )
        return out


def lambda_path(Y, X, basis: Basis, weights=None, cfg: PathConfig | None = None) -> np.ndarray:
    """Decreasing geometric penalty grid from ``lambda_max`` down to
    ``lambda_max * lambda_min_ratio``."""
    cfg = cfg or PathConfig()
    lam_max = lambda_max(Y, X, basis, weights)
    return np.geomspace(lam_max, lam_max * cfg.lambda_min_ratio, cfg.n_lambda)


def information_criteria(rss, df, N, I, gamma):
    """(bic, ebic) for one fit; RSS of zero yields ``-inf`` sentinels."""
    if rss <= 0.0:
        return -np.inf, -np.inf
    bic = N * np.log(rss / N) + df * np.log(N)
    return float(bic), float(bic + 2.0 * gamma * df * np.log(I))


def criterion_value(
    fit: FitResult, Y, X, basis: Basis, criterion: str = "bic", gamma: float = 0.2
) -> float:
    """Information criterion of one fit, recomputed from its coefficients."""
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    rss = residual_sum_squares(Y, X, fit.B_hat, basis)
    bic, ebic = information_criteria(rss, fit.support.size, Y.shape[0], X.shape[1], gamma)
    return bic if criterion == "bic" else ebic


def _zero_fit(Y, X, basis, lam, weights) -> FitResult:
    B = np.zeros((X.shape[1], basis.K))
    resid_w = Y @ basis.gram_cholesky
    return FitResult(
        B_hat=B,
        support=np.array([], dtype=int),
        row_norms=np.zeros(X.shape[1]),
        objective=0.5 * float(np.sum(resid_w**2)),
        kkt=kkt_check(B, Y, X, basis, lam, weights),
        iterations=0,
        converged=True,
        wall_time=0.0,
        lam=lam,
    )


def _path_result(Y, X, basis, lambdas, fits, cfg) -> PathResult:
    N, I = X.shape
    df = np.array([f.support.size for f in fits])
    rss = np.array([residual_sum_squares(Y, X, f.B_hat, basis) for f in fits])
    bic = np.empty(len(fits))
    ebic = np.empty(len(fits))
    for j in range(len(fits)):
        bic[j], ebic[j] = information_criteria(rss[j], df[j], N, I, cfg.ebic_gamma)
    values = bic if cfg.criterion == "bic" else ebic
    selected = int(np.argmin(values))
    return PathResult(
        lambdas=np.asarray(lambdas, dtype=float),
        fits=fits,
        df=df,
        rss=rss,
        bic=bic,
        ebic=ebic,
        criterion=cfg.criterion,
        selected_index=selected,
    )


def _fit_path_unit_weights(workspace: GroupLassoWorkspace, lambdas, solver_kwargs):
    """Warm-started solves along a decreasing grid, all weights one.

    Returns whitened solutions plus bookkeeping; callers map them into
    result records for their own parameterization.
    """
    cfg = FitConfig(lam=float(lambdas[0]), **solver_kwargs)
    state = None
    prev_lam = None
    out = []
    for lam in lambdas:
        t0 = time.perf_counter()
        Z, info = workspace.solve(
            float(lam), None, cfg, state=state, screen=True, prev_lam=prev_lam
        )
        state = info["state"]
        prev_lam = float(lam)
        out.append(
            {
                "lam": float(lam),
                "Z": Z,
                "kkt": info["kkt"],
                "iterations": info["iterations"],
                "converged": info["converged"],
                "wall_time": time.perf_counter() - t0,
            }
        )
    return out


def fit_fsl_path(Y, X, basis: Basis, lambdas, **solver_kwargs) -> list:
    """Plain (unit-weight) fits along a penalty grid, warm-started."""
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)
    ws = GroupLassoWorkspace(X, Y, basis)
    records = _fit_path_unit_weights(ws, lambdas, solver_kwargs)
    fits = []
    for rec in records:
        B = basis.unwhiten(rec["Z"])
        norms = np.linalg.norm(rec["Z"], axis=1)
        resid_w = ws.Yw - ws.X @ rec["Z"]
        objective = 0.5 * float(np.sum(resid_w**2)) + rec["lam"] * float(norms.sum())
        fits.append(
            FitResult(
                B_hat=B,
                support=np.flatnonzero(norms > 0),
                row_norms=norms,
                objective=objective,
                kkt=rec["kkt"],
                iterations=rec["iterations"],
                converged=rec["converged"],
                wall_time=rec["wall_time"],
                lam=rec["lam"],
            )
        )
    return fits


def _fit_afsl_path(Y, X, basis: Basis, weights, lambdas, solver_kwargs) -> list:
    """Adaptive-stage path: drop infinite weights, scale columns, solve the
    unit-weight problem, and map every fit back to the original
    parameterization (coefficients, support, and optimality report)."""
    w = np.asarray(weights, dtype=float)
    finite = np.isfinite(w)
    idx = np.flatnonzero(finite)
    wf = w[finite]
    X_scaled = X[:, finite] / wf[None, :]
    ws = GroupLassoWorkspace(X_scaled, Y, basis)
    I = X.shape[1]
    fits = []
    cfg = FitConfig(lam=float(lambdas[0]), **solver_kwargs)
    state = None
    prev_lam = None
    for lam in lambdas:
        t0 = time.perf_counter()
        Z, info = ws.solve(
            float(lam), None, cfg, state=state, cert_row_scale=wf,
            screen=True, prev_lam=prev_lam,
        )
        state = info["state"]
        prev_lam = float(lam)
        B = np.zeros((I, basis.K))
        B[idx] = basis.unwhiten(Z) / wf[:, None]
        alpha_norms = np.linalg.norm(Z, axis=1)
        norms = np.zeros(I)
        norms[idx] = alpha_norms / wf
        resid_w = ws.Yw - ws.X @ Z
        objective = 0.5 * float(np.sum(resid_w**2)) + float(lam) * float(alpha_norms.sum())
        fits.append(
            FitResult(
                B_hat=B,
                support=idx[alpha_norms > 0],
                row_norms=norms,
                objective=objective,
                kkt=info["kkt"],
                iterations=info["iterations"],
                converged=info["converged"],
                wall_time=time.perf_counter() - t0,
                lam=float(lam),
            )
        )
    return fits


@dataclass
class SelectionResult:
    """Both stages of the sequential sweep, with per-stage wall time."""

    fsl_path: PathResult
    fsl: FitResult
    afsl_path: PathResult | None
    afsl: FitResult | None
    weights: np.ndarray | None
    fsl_seconds: float
    afsl_seconds: float


def select_fsl_afsl(
    Y, X, basis: Basis, cfg: PathConfig | None = None, run_afsl: bool = True, **solver_kwargs
) -> SelectionResult:
    """Sequential selection: criterion sweep for the plain fit, then one for
    the adaptive refit on the screened, reweighted problem."""
    cfg = cfg or PathConfig()
    Y = as_float_matrix(Y, "Y")
    X = as_float_matrix(X, "X")
    check_consistent_rows(X, Y)

    t0 = time.perf_counter()
    lambdas = lambda_path(Y, X, basis, None, cfg)
    fsl_fits = fit_fsl_path(Y, X, basis, lambdas, **solver_kwargs)
    fsl_path = _path_result(Y, X, basis, lambdas, fsl_fits, cfg)
    fsl_seconds = time.perf_counter() - t0
    if not run_afsl:
        return SelectionResult(fsl_path, fsl_path.selected, None, None, None, fsl_seconds, 0.0)

    t1 = time.perf_counter()
    w = adaptive_weights(fsl_path.selected)
    if not np.any(np.isfinite(w)):
        # pilot selected nothing: the adaptive stage has no problem to solve
        zero = _zero_fit(Y, X, basis, 0.0, w)
        afsl_path = _path_result(Y, X, basis, np.array([0.0]), [zero], cfg)
    else:
        afsl_lambdas = lambda_path(Y, X, basis, w, cfg)
        afsl_fits = _fit_afsl_path(Y, X, basis, w, afsl_lambdas, solver_kwargs)
        afsl_path = _path_result(Y, X, basis, afsl_lambdas, afsl_fits, cfg)
    afsl_seconds = time.perf_counter() - t1
    return SelectionResult(
        fsl_path, fsl_path.selected, afsl_path, afsl_path.selected, w, fsl_seconds, afsl_seconds
    )


def select_model(Y, X, basis: Basis, mode: str = "fsl", cfg: PathConfig | None = None, **solver_kwargs):
    """Criterion-selected fit; returns ``(path, chosen)`` for the given mode."""
    if mode not in ("fsl", "afsl"):
        raise ValueError("mode must be 'fsl' or 'afsl'")
    sel = select_fsl_afsl(Y, X, basis, cfg, run_afsl=(mode == "afsl"), **solver_kwargs)
    if mode == "fsl":
        return sel.fsl_path, sel.fsl
    return sel.afsl_path, sel.afsl
