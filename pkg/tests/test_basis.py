import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fslasso.basis import (
    Basis,
    CoefficientMatrix,
    FunctionalVector,
    group_penalty,
    identity_basis,
    inner,
    load_basis,
    norm,
    raw_grid_basis,
    save_basis,
)

G2 = np.array([[2.0, 0.0], [0.0, 1.0]])


def test_inner_zero_vector():
    b = identity_basis(2)
    x = FunctionalVector(np.zeros(2), b)
    assert inner(x, x) == 0.0


def test_inner_orthonormal_unit():
    b = identity_basis(3)
    e1 = FunctionalVector(np.array([1.0, 0.0, 0.0]), b)
    assert inner(e1, e1) == 1.0


def test_inner_weighted_gram():
    b = Basis("raw-grid", G2)
    x = FunctionalVector(np.array([1.0, 1.0]), b)
    assert inner(x, x) == pytest.approx(3.0, abs=1e-14)


def test_inner_incompatible_bases():
    x = FunctionalVector(np.ones(2), identity_basis(2))
    y = FunctionalVector(np.ones(3), identity_basis(3))
    with pytest.raises(ValueError, match="incompatible bases"):
        inner(x, y)


def test_norm_examples():
    assert norm(FunctionalVector(np.zeros(2), identity_basis(2))) == 0.0
    assert norm(FunctionalVector(np.array([3.0, 4.0]), identity_basis(2))) == pytest.approx(5.0)
    b = Basis("raw-grid", G2)
    assert norm(FunctionalVector(np.ones(2), b)) == pytest.approx(np.sqrt(3.0))


def test_group_penalty_examples():
    b = identity_basis(2)
    assert group_penalty(np.zeros((3, 2)), np.array([1.0, 2.0, 0.5]), b) == 0.0
    assert group_penalty(np.array([[3.0, 4.0]]), np.array([1.0]), b) == pytest.approx(5.0)
    B = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert group_penalty(B, np.array([2.0, 0.5]), b) == pytest.approx(3.0)


def test_group_penalty_infinite_weight_on_nonzero_row():
    b = identity_basis(2)
    B = np.array([[1.0, 0.0], [0.0, 2.0]])
    with pytest.raises(ValueError, match="excluded predictor has nonzero"):
        group_penalty(B, np.array([np.inf, 1.0]), b)
    # infinite weight on a zero row is fine
    B[0] = 0.0
    assert group_penalty(B, np.array([np.inf, 1.0]), b) == pytest.approx(2.0)


def test_group_penalty_unit_weights_is_norm_sum(rng):
    K = 4
    A = rng.standard_normal((K, K))
    b = Basis("raw-grid", A @ A.T + K * np.eye(K))
    B = rng.standard_normal((6, K))
    expected = sum(b.norm(row) for row in B)
    assert group_penalty(B, np.ones(6), b) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(-100, 100))
def test_cauchy_schwarz_and_homogeneity(seed, a):
    r = np.random.default_rng(seed)
    K = 5
    A = r.standard_normal((K, K))
    b = Basis("raw-grid", A @ A.T + K * np.eye(K))
    x, y = r.standard_normal(K), r.standard_normal(K)
    assert abs(b.inner(x, y)) <= b.norm(x) * b.norm(y) * (1 + 1e-10) + 1e-12
    assert b.norm(a * x) == pytest.approx(abs(a) * b.norm(x), rel=1e-10, abs=1e-12)


def test_fpc_inner_is_euclidean(rng):
    b = identity_basis(6)
    x, y = rng.standard_normal(6), rng.standard_normal(6)
    assert b.inner(x, y) == pytest.approx(float(x @ y), rel=1e-14)


def test_gram_must_be_symmetric_and_spd():
    bad = np.array([[1.0, 0.5], [0.3, 1.0]])
    with pytest.raises(ValueError, match="not symmetric"):
        Basis("raw-grid", bad)
    with pytest.raises(ValueError, match="positive definite"):
        Basis("raw-grid", np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_fpc_requires_identity_gram():
    with pytest.raises(ValueError, match="identity"):
        Basis("fpc", G2)


def test_raw_grid_basis_riemann_weight():
    grid = np.linspace(0.0, 1.0, 11)
    b = raw_grid_basis(grid)
    assert b.K == 11
    assert np.allclose(b.gram, 0.1 * np.eye(11))
    # norm of the constant 1 approximates the L2 norm sqrt(int 1) times sqrt
    assert b.norm(np.ones(11)) == pytest.approx(np.sqrt(1.1))


def test_coefficient_matrix_support(rng):
    b = identity_basis(3)
    B = np.zeros((4, 3))
    B[1] = rng.standard_normal(3)
    B[3] = rng.standard_normal(3)
    cm = CoefficientMatrix(B, b)
    assert list(cm.support()) == [1, 3]


def test_basis_arrays_frozen():
    b = identity_basis(3)
    with pytest.raises(ValueError):
        b.gram[0, 0] = 2.0


def test_save_load_round_trip(tmp_path, rng):
    grid = np.linspace(0.0, 1.0, 7)
    A = rng.standard_normal((4, 4))
    phi = rng.standard_normal((7, 4))
    b = Basis("bspline", A @ A.T + 4 * np.eye(4), np.eye(4), grid=grid, phi=phi)
    path = tmp_path / "basis.txt"
    save_basis(b, path)
    b2 = load_basis(path)
    assert b2 == b
    assert b2.kind == "bspline"


def test_load_basis_missing_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("K = 2\n[gram]\n1,0\n0,1\n")
    with pytest.raises(ValueError, match="kind"):
        load_basis(p)
