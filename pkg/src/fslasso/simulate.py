"""Synthetic data generation for the benchmark scenarios.

Nonzero coefficient functions are mean-zero Gaussian processes with a Matern
covariance (smoothness 5/2), errors are rougher Matern 3/2 processes, and
predictors are AR(1)-correlated standard normals with standardized columns.
Everything is deterministic given a scenario seed and replication index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_float_vector

_JITTER_START = 1e-12
_JITTER_MAX = 1e-6


@dataclass(frozen=True)
class MaternParams:
    """Matern covariance parameters: pointwise variance, range, smoothness."""

    sigma2: float = 1.0
    tau: float = 0.25
    nu: float = 2.5

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.tau <= 0:
            raise ValueError("range parameter tau must be positive")
        if self.nu not in (1.5, 2.5):
            raise ValueError("nu must be 1.5 or 2.5")


def matern_cov(params: MaternParams, s, t):
    """Covariance C(s, t) for the two supported smoothness values.

    With d = |s - t|:

        nu = 5/2:  sigma2 * (1 + sqrt(5) d / tau + 5 d^2 / (3 tau^2)) * exp(-sqrt(5) d / tau)
        nu = 3/2:  sigma2 * (1 + sqrt(3) d / tau) * exp(-sqrt(3) d / tau)

    Accepts scalars or broadcastable arrays.
    """
    d = np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float))
    r = d / params.tau
    if params.nu == 2.5:
        c = (1.0 + np.sqrt(5.0) * r + (5.0 / 3.0) * r**2) * np.exp(-np.sqrt(5.0) * r)
    else:
        c = (1.0 + np.sqrt(3.0) * r) * np.exp(-np.sqrt(3.0) * r)
    out = params.sigma2 * c
    return float(out) if np.isscalar(s) and np.isscalar(t) else out


def matern_cov_matrix(params: MaternParams, grid) -> np.ndarray:
    grid = as_float_vector(grid, "grid")
    return matern_cov(params, grid[:, None], grid[None, :])


def _jittered_cholesky(C, sigma2):
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(C + jitter * np.eye(C.shape[0]))
        except np.linalg.LinAlgError:
            jitter = _JITTER_START * sigma2 if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_MAX * sigma2:
                raise np.linalg.LinAlgError(
                    "covariance factorization failed at maximum jitter"
                ) from None


def sample_gp(params: MaternParams, grid, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` mean-zero Gaussian-process paths on ``grid``, one per row.

    Dense Matern matrices on fine grids are near singular, so the Cholesky
    factorization escalates a diagonal jitter from 1e-12 to 1e-6 times the
    pointwise variance before giving up.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    grid = as_float_vector(grid, "grid")
    L = _jittered_cholesky(matern_cov_matrix(params, grid), params.sigma2)
    z = rng.standard_normal((n, grid.size))
    return z @ L.T


def sample_design(N: int, I: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """AR(1)-correlated standard-normal design with standardized columns.

    Row-wise recursion ``X_1 = z_1``, ``X_i = rho X_{i-1} + sqrt(1-rho^2) z_i``
    gives Cov(X_i, X_j) = rho^|i-j|; columns are then standardized to exact
    empirical mean 0 and variance 1 (divide-by-N convention).
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    z = rng.standard_normal((N, I))
    X = np.empty_like(z)
    X[:, 0] = z[:, 0]
    scale = np.sqrt(1.0 - rho * rho)
    for i in range(1, I):
        X[:, i] = rho * X[:, i - 1] + scale * z[:, i]
    X -= X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd == 0):
        raise ValueError("degenerate design column with zero variance")
    X /= sd
    return X


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one simulation scenario."""

    N: int = 100
    I: int = 500
    I0: int = 10
    grid_points: int = 50
    tau_beta: float = 0.25
    tau_eps: float = 0.25
    rho: float = 0.0
    sigma2: float = 1.0
    seed: int = 0
    replications: int = 50

    def __post_init__(self):
        if self.N < 1 or self.I < 1:
            raise ValueError("N and I must be positive")
        if not 0 <= self.I0 <= self.I:
            raise ValueError("I0 must satisfy 0 <= I0 <= I")
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if self.sigma2 <= 0 or self.tau_beta <= 0 or self.tau_eps <= 0:
            raise ValueError("variance and range parameters must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_points)


@dataclass(frozen=True)
class SimulatedDataset:
    """One generated replication: curves, design, and ground truth."""

    Y: np.ndarray
    X: np.ndarray
    beta_true: np.ndarray
    support_true: np.ndarray
    grid: np.ndarray
    seed_used: tuple

    @property
    def N(self) -> int:
        return self.Y.shape[0]


def replication_rng(seed: int, replication_index: int) -> np.random.Generator:
    """Independent, reproducible child stream for one replication."""
    return np.random.default_rng(np.random.SeedSequence([seed, replication_index]))


def generate_scenario(
    cfg: ScenarioConfig, replication_index: int = 0, noise_scale: float = 1.0
) -> SimulatedDataset:
    """Generate one replication of the linear model on the even grid.

    ``Y[n, g] = sum_{i < I0} X[n, i] * beta[i, g] + noise_scale * eps[n, g]``.
    ``noise_scale=0`` is the zero-noise debug mode.
    """
    if replication_index < 0:
        raise ValueError("replication_index must be nonnegative")
    rng = replication_rng(cfg.seed, replication_index)
    grid = cfg.grid
    beta_params = MaternParams(sigma2=cfg.sigma2, tau=cfg.tau_beta, nu=2.5)
    eps_params = MaternParams(sigma2=cfg.sigma2, tau=cfg.tau_eps, nu=1.5)
    if cfg.I0 > 0:
        beta = sample_gp(beta_params, grid, cfg.I0, rng)
    else:
        beta = np.zeros((0, grid.size))
    eps = sample_gp(eps_params, grid, cfg.N, rng)
    X = sample_design(cfg.N, cfg.I, cfg.rho, rng)
    Y = X[:, : cfg.I0] @ beta + noise_scale * eps
    return SimulatedDataset(
        Y=Y,
        X=X,
        beta_true=beta,
        support_true=np.arange(cfg.I0),
        grid=grid,
        seed_used=(cfg.seed, replication_index),
    )
