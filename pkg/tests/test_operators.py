import numpy as np
import pytest
import sympy
from numpy.testing import assert_allclose

from gramcone import numlin
from gramcone.instances import random_matrix
from gramcone.numlin import TolerancePolicy
from gramcone.operators import (
    AxiomError,
    Family,
    MatrixOperator,
    SingularSystem,
    TruncationSpec,
    adjoint,
    build_truncation,
    gram,
    least_squares_min_norm,
    mp_inverse,
    spectral_pinv_apply,
    verify_identities,
)


def test_adjoint_examples():
    assert_allclose(adjoint(MatrixOperator(np.diag([1.0, 2.0]))).matrix, np.diag([1.0, 2.0]))
    assert_allclose(adjoint(MatrixOperator([[0.0, 1.0], [0.0, 0.0]])).matrix, [[0, 0], [1, 0]])
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE42, 6))
    assert np.array_equal(adjoint(T).matrix, T.matrix)


def test_adjoint_is_an_involution():
    A = np.random.default_rng(0).standard_normal((3, 5))
    T = MatrixOperator(A)
    assert np.array_equal(adjoint(adjoint(T)).matrix, T.matrix)


def test_operator_matrix_is_read_only():
    T = MatrixOperator(np.eye(2))
    with pytest.raises(ValueError):
        T.matrix[0, 0] = 5.0


def test_gram_examples():
    assert_allclose(gram(MatrixOperator(np.diag([1.0, 2.0, 3.0]))).matrix, np.diag([1.0, 4.0, 9.0]))
    assert not gram(MatrixOperator(np.zeros((2, 3)))).matrix.any()
    expected = sympy.Matrix([[1, 1], [0, 1]]).T * sympy.Matrix([[1, 1], [0, 1]])
    assert_allclose(gram(MatrixOperator([[1.0, 1.0], [0.0, 1.0]])).matrix, np.array(expected, dtype=float))


def test_gram_is_symmetric_psd():
    for seed in range(50):
        G = gram(MatrixOperator(random_matrix(seed))).matrix
        assert np.array_equal(G, G.T)
        assert np.linalg.eigvalsh(G).min() >= -1e-12 * max(1.0, np.abs(G).max())


@pytest.mark.parametrize("N", [2, 5, 50])
def test_mp_inverse_example41(N):
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE41, N))
    assert_allclose(mp_inverse(T).matrix, np.diag(1.0 / np.arange(1, N + 1)), atol=1e-15)


@pytest.mark.parametrize("N", [2, 5, 50])
def test_mp_inverse_example42(N):
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE42, N))
    expected = np.diag(np.r_[0.0, 1.0 / np.arange(2, N + 1)])
    assert_allclose(mp_inverse(T).matrix, expected, atol=1e-15)


def test_mp_inverse_permutation():
    P = np.eye(4)[[2, 0, 3, 1]]
    assert_allclose(mp_inverse(MatrixOperator(P)).matrix, P.T, atol=1e-15)


def test_mp_inverse_axiom_failure_on_too_tight_policy():
    A = np.random.default_rng(2).standard_normal((4, 3))
    T = MatrixOperator(A, TolerancePolicy(identity_tol=1e-300))
    with pytest.raises(AxiomError):
        mp_inverse(T)


def test_least_squares_examples():
    assert_allclose(least_squares_min_norm(MatrixOperator(np.diag([1.0, 0.0])), [2.0, 5.0]), [2.0, 0.0])
    y = np.array([0.3, -1.2, 4.0])
    assert_allclose(least_squares_min_norm(MatrixOperator(np.eye(3)), y), y)
    # calculus oracle: d/dx [x^2 + (x-2)^2] = 0  ->  x = 1
    x = sympy.Symbol("x")
    xstar = sympy.solve(sympy.diff(x**2 + (x - 2) ** 2, x), x)[0]
    assert_allclose(least_squares_min_norm(MatrixOperator([[1.0], [1.0]]), [0.0, 2.0]), [float(xstar)])


def test_least_squares_rejects_wrong_length():
    with pytest.raises(ValueError):
        least_squares_min_norm(MatrixOperator(np.eye(2)), [1.0, 2.0, 3.0])


def test_least_squares_is_minimal(policy):
    rng = np.random.default_rng(11)
    for seed in range(20):
        A = random_matrix(seed, (6, 6))
        T = MatrixOperator(A, policy)
        y = rng.standard_normal(A.shape[0])
        x = least_squares_min_norm(T, y)
        best = np.linalg.norm(A @ np.linalg.lstsq(A, y, rcond=None)[0] - y)
        assert np.linalg.norm(A @ x - y) <= best + 1e-12
        N = numlin.null_basis(A, policy)
        assert np.linalg.norm(N.T @ x) < 1e-12
        if N.shape[1]:
            for _ in range(100):
                n = N @ rng.standard_normal(N.shape[1])
                assert np.linalg.norm(x) <= np.linalg.norm(x + n) + 1e-15


def test_verify_identities_examples():
    rep = verify_identities(MatrixOperator(np.diag([1.0, 2.0, 3.0])))
    assert rep.worst < 1e-15 and rep.ok
    rep = verify_identities(MatrixOperator([[1.0, 1.0], [1.0, 1.0]]))
    assert rep.worst <= 1e-12
    rng = np.random.default_rng(5)
    A = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 3))
    assert numlin.rank(A) == 2
    assert verify_identities(MatrixOperator(A)).ok


def test_verify_identities_on_truncations():
    for fam in Family:
        T, _ = build_truncation(TruncationSpec(fam, 20))
        rep = verify_identities(T)
        assert rep.ok, rep.residuals


def test_verify_identities_random_500():
    failures = [s for s in range(500) if not verify_identities(MatrixOperator(random_matrix(s))).ok]
    assert failures == []


def test_build_truncation_examples():
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE41, 3))
    assert np.array_equal(T.matrix, np.diag([1.0, 2.0, 3.0]))
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE42, 3))
    assert np.array_equal(T.matrix, np.diag([0.0, 2.0, 3.0]))
    T, S = build_truncation(TruncationSpec(Family.EXAMPLE43, 2))
    assert_allclose(gram(T).matrix, np.diag([1.0, 4.0]))
    assert T.shape == (3, 2) and S.shape == (3, 2)


def test_truncation_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec("Example44", 3)
    with pytest.raises(ValueError):
        TruncationSpec(Family.EXAMPLE41, 1)


def test_example42_kernel_and_rowspace(policy):
    T, _ = build_truncation(TruncationSpec(Family.EXAMPLE42, 8))
    N = numlin.null_basis(T.matrix, policy)
    assert N.shape == (8, 1)
    assert_allclose(np.abs(N[:, 0]), np.eye(8)[0], atol=1e-15)
    P = numlin.projector_rowspace(T.matrix, policy)
    assert_allclose(P, np.diag([0.0] + [1.0] * 7), atol=1e-15)


def test_spectral_pinv_examples():
    _, S = build_truncation(TruncationSpec(Family.EXAMPLE43, 4))
    assert_allclose(spectral_pinv_apply(S, S.range[:, 1]), 0.5 * S.domain[:, 1])
    constant_mode = np.eye(5)[0]
    assert not spectral_pinv_apply(S, constant_mode).any()
    ident = SingularSystem(np.ones(3), np.eye(3), np.eye(3))
    y = np.array([1.0, -2.0, 0.5])
    assert_allclose(spectral_pinv_apply(ident, y), y)


def test_spectral_pinv_matches_matrix_pinv():
    rng = np.random.default_rng(9)
    for fam in Family:
        T, S = build_truncation(TruncationSpec(fam, 16))
        Tp = numlin.pinv(T.matrix)
        for _ in range(20):
            y = rng.standard_normal(T.shape[0])
            assert np.abs(spectral_pinv_apply(S, y) - Tp @ y).max() < 1e-12


def test_singular_system_validation():
    with pytest.raises(ValueError):
        SingularSystem([1.0, -1.0], np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        SingularSystem([1.0, 1.0], np.ones((2, 2)), np.eye(2))
