import numpy as np
import pytest

from fslasso.bsplines import (
    bspline_basis,
    bspline_gram_penalty,
    bspline_knots,
    evaluate_bsplines,
)


def test_partition_of_unity_single_interval():
    # two grid points, four cubic functions: the Bernstein-like basis
    grid = np.array([0.0, 1.0])
    basis = bspline_basis(grid, n_basis=4, order=4)
    assert basis.phi.shape == (2, 4)
    np.testing.assert_allclose(basis.phi.sum(axis=1), 1.0, atol=1e-12)


def test_partition_of_unity_dense():
    x = np.linspace(0.0, 1.0, 201)
    V = evaluate_bsplines(x, n_basis=12, order=4)
    np.testing.assert_allclose(V.sum(axis=1), 1.0, atol=1e-10)


def test_penalty_annihilates_linear_functions():
    n_basis, order = 10, 4
    x = np.linspace(0.0, 1.0, 400)
    V = evaluate_bsplines(x, n_basis, order)
    # coefficients representing f(t) = 2 - 3t, exactly in the spline span
    target = 2.0 - 3.0 * x
    c, *_ = np.linalg.lstsq(V, target, rcond=None)
    np.testing.assert_allclose(V @ c, target, atol=1e-10)
    _, penalty = bspline_gram_penalty(n_basis, order)
    np.testing.assert_allclose(penalty @ c, 0.0, atol=1e-8)


def _simpson_matrix(n_basis, order, derivative, n_sub=40):
    """Independent quadrature oracle: composite Simpson per knot span."""
    knots = bspline_knots(n_basis, order)
    breaks = np.unique(knots)
    total = np.zeros((n_basis, n_basis))
    for a, b in zip(breaks[:-1], breaks[1:]):
        x = np.linspace(a, b, 2 * n_sub + 1)
        h = (b - a) / (2 * n_sub)
        w = np.ones(x.size)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        V = evaluate_bsplines(x, n_basis, order, derivative=derivative)
        total += (V * w[:, None]).T @ V
    return total


@pytest.mark.parametrize("derivative", [0, 2])
def test_quadrature_against_simpson_oracle(derivative):
    n_basis, order = 10, 4
    gram, penalty = bspline_gram_penalty(n_basis, order)
    target = gram if derivative == 0 else penalty
    oracle = _simpson_matrix(n_basis, order, derivative)
    np.testing.assert_allclose(target, oracle, atol=1e-8)


def test_gram_refinement_stable():
    # doubling the per-span rule does not change the exact integrals
    g1, p1 = bspline_gram_penalty(10, 4, n_quad=5)
    g2, p2 = bspline_gram_penalty(10, 4, n_quad=10)
    np.testing.assert_allclose(g1, g2, atol=1e-14)
    np.testing.assert_allclose(p1, p2, atol=1e-10)


def test_phi_full_column_rank_and_gram_spd():
    grid = np.linspace(0.0, 1.0, 25)
    basis = bspline_basis(grid, n_basis=12, order=4)
    assert np.linalg.matrix_rank(basis.phi) == 12
    eigvals = np.linalg.eigvalsh(basis.gram)
    assert eigvals.min() > 0


def test_grid_validation():
    with pytest.raises(ValueError, match="within"):
        bspline_basis(np.array([0.0, 1.2]), 4)
    with pytest.raises(ValueError, match="increasing"):
        bspline_basis(np.array([0.5, 0.2]), 4)
    with pytest.raises(ValueError, match="at least the spline order"):
        bspline_basis(np.array([0.0, 1.0]), 2, order=4)
