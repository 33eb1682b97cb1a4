"""Coefficient-space representation of functional data.

Every curve is stored as a coefficient vector with respect to a basis, and
the basis carries the Gram matrix G that defines the inner product
``<x, y> = x' G y``.  L2, Sobolev, and RKHS geometries differ only in G, so
all downstream code (smoothing, FPCA, the lasso solver) works uniformly in
coefficient space.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .validation import as_float_matrix, as_float_vector

_SYM_RTOL = 1e-12

BASIS_KINDS = ("bspline", "fpc", "raw-grid")


class Basis:
    """Basis metadata: dimension, Gram matrix, roughness penalty, grid.

    Parameters
    ----------
    kind : str
        One of ``"bspline"``, ``"fpc"``, ``"raw-grid"``.
    gram : ndarray of shape (K, K)
        Symmetric positive-definite matrix defining the inner product.
        For ``kind="fpc"`` this must be the identity.
    penalty : ndarray of shape (K, K), optional
        Symmetric positive-semidefinite roughness matrix.  Defaults to zero.
    grid : ndarray of shape (m,), optional
        Ordered evaluation points in [0, 1].
    phi : ndarray of shape (m, K), optional
        Basis evaluation matrix on ``grid``.

    The Gram matrix is Cholesky-factored once at construction; the factor is
    reused for every group norm in the solver's inner loop.  All arrays are
    frozen after construction, so a Basis is safe to share across workers.
    """

    def __init__(self, kind, gram, penalty=None, grid=None, phi=None):
        if kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {kind!r}; expected one of {BASIS_KINDS}")
        gram = as_float_matrix(gram, "gram")
        K = gram.shape[0]
        if gram.shape != (K, K):
            raise ValueError(f"gram must be square, got shape {gram.shape}")
        _check_symmetric(gram, "gram")
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as exc:
            raise ValueError("gram matrix is not positive definite") from exc
        if kind == "fpc" and not np.allclose(gram, np.eye(K), atol=1e-10):
            raise ValueError("fpc basis requires an identity gram matrix")

        if penalty is None:
            penalty = np.zeros((K, K))
        penalty = as_float_matrix(penalty, "penalty")
        if penalty.shape != (K, K):
            raise ValueError(f"penalty must be {K}x{K}, got {penalty.shape}")
        _check_symmetric(penalty, "penalty")

        if grid is not None:
            grid = as_float_vector(grid, "grid")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("grid must be strictly increasing")
            if phi is None:
                raise ValueError("phi is required when a grid is given")
            phi = as_float_matrix(phi, "phi")
            if phi.shape != (grid.size, K):
                raise ValueError(f"phi must be {grid.size}x{K}, got {phi.shape}")
            if grid.size >= K and np.linalg.matrix_rank(phi) < K:
                raise ValueError("phi does not have full column rank")

        self.kind = kind
        self.K = K
        self.gram = gram
        self.penalty = penalty
        self.grid = grid
        self.phi = phi
        self._chol = chol  # lower triangular L with G = L L'
        for arr in (self.gram, self.penalty, self.grid, self.phi, self._chol):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def gram_cholesky(self):
        """Lower-triangular L with ``gram = L @ L.T``."""
        return self._chol

    def whiten(self, coeffs):
        """Map coefficient rows into coordinates where the norm is Euclidean.

        ``whiten(c) = c @ L``, so ``norm(c) == np.linalg.norm(whiten(c))``.
        """
        return np.atleast_2d(coeffs) @ self._chol

    def unwhiten(self, w):
        """Inverse of :meth:`whiten` (solve against L on the right)."""
        return scipy.linalg.solve_triangular(self._chol, np.atleast_2d(w).T, lower=True).T

    def inner(self, x, y):
        """Inner product ``x' G y`` of two coefficient vectors."""
        x = as_float_vector(x, "x")
        y = as_float_vector(y, "y")
        if x.size != self.K or y.size != self.K:
            raise ValueError("coefficient length does not match basis dimension")
        return float(x @ self.gram @ y)

    def norm(self, x):
        """Norm ``sqrt(x' G x)`` of a coefficient vector."""
        v = as_float_vector(x, "x") @ self._chol
        return float(np.linalg.norm(v))

    def row_norms(self, B):
        """Norms of the rows of a coefficient matrix, as a 1-d array."""
        B = as_float_matrix(B, "B")
        if B.shape[1] != self.K:
            raise ValueError("coefficient columns do not match basis dimension")
        return np.linalg.norm(B @ self._chol, axis=1)

    def evaluate(self, coeffs):
        """Evaluate coefficient rows on the basis grid (requires phi)."""
        if self.phi is None:
            raise ValueError("basis has no grid/evaluation matrix")
        return np.atleast_2d(coeffs) @ self.phi.T

    def __repr__(self):
        m = 0 if self.grid is None else self.grid.size
        return f"Basis(kind={self.kind!r}, K={self.K}, grid_points={m})"

    def __eq__(self, other):
        if not isinstance(other, Basis):
            return NotImplemented
        if self.kind != other.kind or self.K != other.K:
            return False
        if not np.array_equal(self.gram, other.gram):
            return False
        if not np.array_equal(self.penalty, other.penalty):
            return False
        if (self.grid is None) != (other.grid is None):
            return False
        if self.grid is not None and not (
            np.array_equal(self.grid, other.grid) and np.array_equal(self.phi, other.phi)
        ):
            return False
        return True


def _check_symmetric(A, name):
    scale = max(float(np.abs(A).max()), 1.0)
    if float(np.abs(A - A.T).max()) > _SYM_RTOL * scale:
        raise ValueError(f"{name} matrix is not symmetric")


@dataclass(frozen=True)
class FunctionalVector:
    """One element of the function space: coefficients plus their basis."""

    coeffs: np.ndarray
    basis: Basis

    def norm(self):
        return self.basis.norm(self.coeffs)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Full parameter matrix: one functional coefficient per predictor row."""

    B: np.ndarray
    basis: Basis

    def row_norms(self):
        return self.basis.row_norms(self.B)

    def support(self, tol=0.0):
        """Indices of rows with norm strictly greater than ``tol``."""
        return np.flatnonzero(self.row_norms() > tol)


def inner(x: FunctionalVector, y: FunctionalVector) -> float:
    """Inner product of two functional vectors sharing a basis."""
    if x.basis is not y.basis and x.basis != y.basis:
        raise ValueError("incompatible bases")
    return x.basis.inner(x.coeffs, y.coeffs)


def norm(x: FunctionalVector) -> float:
    return x.basis.norm(x.coeffs)


def group_penalty(B, weights, basis: Basis) -> float:
    """Weighted sum of row norms, ``sum_i w_i * ||B_i||``.

    Weights may be ``+inf``, meaning the predictor is excluded; an excluded
    row must be exactly zero.
    """
    weights = as_float_vector(weights, "weights", allow_inf=True)
    B = as_float_matrix(B, "B")
    if weights.size != B.shape[0]:
        raise ValueError("one weight per coefficient row is required")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    norms = basis.row_norms(B)
    infinite = ~np.isfinite(weights)
    if np.any(norms[infinite] > 0):
        raise ValueError("excluded predictor has nonzero coefficient")
    finite = ~infinite
    return float(weights[finite] @ norms[finite])


def raw_grid_basis(grid) -> Basis:
    """Basis whose coefficients are the curve values on an even grid.

    The Gram matrix is ``dt * I`` (Riemann weight), so norms approximate the
    L2 norm of the underlying curve.  Meant for quick experiments on data
    generated directly on grids.
    """
    grid = as_float_vector(grid, "grid")
    if grid.size < 2:
        raise ValueError("raw-grid basis needs at least two points")
    dt = float(grid[1] - grid[0])
    if not np.allclose(np.diff(grid), dt, rtol=1e-8, atol=1e-12):
        raise ValueError("raw-grid basis requires an evenly spaced grid")
    K = grid.size
    return Basis("raw-grid", dt * np.eye(K), np.zeros((K, K)), grid=grid, phi=np.eye(K))


def identity_basis(K: int) -> Basis:
    """Orthonormal basis with no grid attached (Euclidean geometry)."""
    return Basis("fpc", np.eye(K))


# ---------------------------------------------------------------------------
# Text serialization.  Layout: a key = value header followed by named CSV
# blocks, one row per line.  See README for the documented schema.
# ---------------------------------------------------------------------------

def _write_block(buf, name, A):
    buf.write(f"[{name}]\n")
    for row in np.atleast_2d(A):
        buf.write(",".join(format(v, ".17g") for v in row) + "\n")


def save_basis(basis: Basis, path) -> None:
    """Write a basis to ``path`` in the text format described in the README."""
    buf = io.StringIO()
    buf.write(f"kind = {basis.kind}\n")
    buf.write(f"K = {basis.K}\n")
    if basis.grid is not None:
        buf.write("grid = " + ",".join(format(v, ".17g") for v in basis.grid) + "\n")
    _write_block(buf, "gram", basis.gram)
    _write_block(buf, "penalty", basis.penalty)
    if basis.phi is not None:
        _write_block(buf, "phi", basis.phi)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_basis(path) -> Basis:
    """Read a basis written by :func:`save_basis`."""
    header = {}
    blocks = {}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                blocks[current] = []
            elif current is None:
                key, _, value = line.partition("=")
                header[key.strip()] = value.strip()
            else:
                blocks[current].append([float(v) for v in line.split(",")])
    for required in ("kind", "K"):
        if required not in header:
            raise ValueError(f"basis file is missing the {required!r} header key")
    if "gram" not in blocks:
        raise ValueError("basis file is missing the [gram] block")
    kind = header["kind"]
    K = int(header["K"])
    gram = np.asarray(blocks["gram"])
    penalty = np.asarray(blocks["penalty"]) if "penalty" in blocks else None
    grid = phi = None
    if "grid" in header:
        grid = np.asarray([float(v) for v in header["grid"].split(",")])
        phi = np.asarray(blocks.get("phi"))
        if phi.ndim == 0:
            raise ValueError("basis file has a grid but no [phi] block")
    if gram.shape != (K, K):
        raise ValueError("gram block does not match the declared dimension K")
    return Basis(kind, gram, penalty, grid=grid, phi=phi)
