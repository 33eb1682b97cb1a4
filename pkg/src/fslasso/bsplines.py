"""Clamped B-spline bases on [0, 1] with exact Gram and roughness matrices.

Basis functions come from the Cox-de Boor recursion (scipy's BSpline); the
Gram matrix ``G_ij = int phi_i phi_j`` and the penalty
``P_ij = int phi_i'' phi_j''`` are assembled by Gauss-Legendre quadrature per
knot span, with enough nodes to be exact for piecewise polynomials of the
orders involved.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline

from .basis import Basis
from .validation import as_float_vector


def bspline_knots(n_basis: int, order: int) -> np.ndarray:
    """Clamped, equally spaced knot vector on [0, 1] for ``n_basis`` functions."""
    if n_basis < order:
        raise ValueError("n_basis must be at least the spline order")
    interior = np.linspace(0.0, 1.0, n_basis - order + 2)[1:-1]
    return np.concatenate([np.zeros(order), interior, np.ones(order)])


def _all_bsplines(knots, degree):
    # identity coefficient block -> evaluates every basis function at once
    return BSpline(knots, np.eye(len(knots) - degree - 1), degree, extrapolate=False)


def evaluate_bsplines(x, n_basis, order=4, derivative=0):
    """Evaluate all basis functions (or a derivative) at points ``x``.

    Returns an array of shape ``(len(x), n_basis)``.
    """
    x = as_float_vector(x, "x")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("evaluation points must lie within [0, 1]")
    spl = _all_bsplines(bspline_knots(n_basis, order), order - 1)
    if derivative:
        spl = spl.derivative(derivative)
    return spl(x)


def _gauss_legendre_spans(knots, n_nodes):
    """Quadrature nodes/weights covering each distinct knot span."""
    breaks = np.unique(knots)
    x_ref, w_ref = np.polynomial.legendre.leggauss(n_nodes)
    nodes = []
    weights = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (b - a)
        nodes.append(half * (x_ref + 1.0) + a)
        weights.append(half * w_ref)
    return np.concatenate(nodes), np.concatenate(weights)


def bspline_gram_penalty(n_basis, order=4, penalty_order=2, n_quad=None):
    """Exact Gram and roughness-penalty matrices for the clamped basis.

    ``n_quad`` nodes per span; the default ``order + 1`` integrates products
    of two order-``order`` splines exactly (degree 2(order-1) <= 2*order - 1).
    """
    if n_quad is None:
        n_quad = order + 1
    knots = bspline_knots(n_basis, order)
    degree = order - 1
    x, w = _gauss_legendre_spans(knots, n_quad)
    spl = _all_bsplines(knots, degree)
    V = spl(x)
    gram = (V * w[:, None]).T @ V
    D = spl.derivative(penalty_order)(x)
    penalty = (D * w[:, None]).T @ D
    # quadrature assembly is symmetric only up to roundoff
    gram = 0.5 * (gram + gram.T)
    penalty = 0.5 * (penalty + penalty.T)
    return gram, penalty


def bspline_basis(grid, n_basis, order=4, penalty_order=2) -> Basis:
    """Build a clamped B-spline :class:`Basis` evaluated on ``grid``.

    The grid must be sorted and lie inside [0, 1].
    """
    grid = as_float_vector(grid, "grid")
    if grid.size < 2:
        raise ValueError("grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValueError("grid points must lie within [0, 1]")
    phi = evaluate_bsplines(grid, n_basis, order)
    gram, penalty = bspline_gram_penalty(n_basis, order, penalty_order)
    return Basis("bspline", gram, penalty, grid=grid, phi=phi)
