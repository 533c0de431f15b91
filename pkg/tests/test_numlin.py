import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose
from scipy.optimize import nnls as scipy_nnls

from gramcone import numlin
from gramcone.instances import random_matrix
from gramcone.numlin import NnlsError, SvdError, TolerancePolicy


def penrose_residuals(A, Ap):
    return [
        np.linalg.norm(A @ Ap @ A - A),
        np.linalg.norm(Ap @ A @ Ap - Ap),
        np.linalg.norm((A @ Ap).T - A @ Ap),
        np.linalg.norm((Ap @ A).T - Ap @ A),
    ]


def exact_singular_values(rows):
    """Square roots of the eigenvalues of A^T A, in exact arithmetic."""
    A = sympy.Matrix(rows)
    eig = (A.T * A).eigenvals()
    vals = sorted((sympy.sqrt(v) for v, mult in eig.items() for _ in range(mult)), reverse=True)
    return [float(v) for v in vals]


# ------------------------------------------------------------------ policy


def test_policy_validation():
    with pytest.raises(ValueError):
        TolerancePolicy(rank_rel_tol=1.5)
    with pytest.raises(ValueError):
        TolerancePolicy(membership_tol=0.0)
    with pytest.raises(ValueError):
        TolerancePolicy(identity_tol=-1.0)
    assert TolerancePolicy().rank_cutoff((3, 5)) == pytest.approx(5 * np.finfo(float).eps * 64)
    assert TolerancePolicy(rank_rel_tol=1e-6).rank_cutoff((3, 5)) == 1e-6


def test_policy_dict_roundtrip():
    p = TolerancePolicy(rank_rel_tol=1e-10, membership_tol=1e-8)
    assert TolerancePolicy.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        TolerancePolicy.from_dict({"bogus": 1})


# --------------------------------------------------------------------- svd


def test_svd_diagonal():
    f = numlin.svd(np.diag([3.0, 2.0, 1.0]))
    assert_allclose(f.s, [3, 2, 1])
    assert_allclose(np.abs(f.u), np.eye(3))
    assert_allclose(np.abs(f.vt), np.eye(3))


def test_svd_zero():
    assert_allclose(numlin.svd(np.zeros((2, 2))).s, [0, 0])


def test_svd_rank_one_against_exact_eigenvalues():
    expected = exact_singular_values([[1, 1], [1, 1]])
    assert expected == [2.0, 0.0]
    assert_allclose(numlin.svd([[1.0, 1.0], [1.0, 1.0]]).s, expected, atol=1e-15)


def test_svd_rejects_non_finite():
    with pytest.raises(ValueError):
        numlin.svd([[1.0, np.nan]])


def test_svd_failure_is_explicit(monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", boom)
    with pytest.raises(SvdError):
        numlin.svd(np.eye(2))
    with pytest.raises(SvdError):
        numlin.pinv(np.eye(2))


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 7), st.integers(1, 7)), elements=st.floats(-10, 10)))
def test_svd_invariants(A):
    f = numlin.svd(A)
    assert np.all(np.diff(f.s) <= 0) and np.all(f.s >= 0)
    k = f.s.size
    assert_allclose(f.u.T @ f.u, np.eye(k), atol=1e-12)
    assert_allclose(f.vt @ f.vt.T, np.eye(k), atol=1e-12)
    assert np.linalg.norm(f.reconstruct() - A) <= 1e-12 * max(1.0, np.linalg.norm(A))


def test_svd_is_deterministic():
    A = np.random.default_rng(1).standard_normal((7, 4))
    f1, f2 = numlin.svd(A), numlin.svd(A)
    assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.s, f2.s)


# -------------------------------------------------------------------- rank


@pytest.mark.parametrize(
    "s, tol, expected",
    [([3, 2, 1], 1e-12, 3), ([1, 1e-16], 1e-12, 1), ([2, 0], 1e-12, 1), ([0, 0], 1e-12, 0), ([], 1e-12, 0)],
)
def test_numeric_rank(s, tol, expected):
    assert numlin.numeric_rank(s, TolerancePolicy(rank_rel_tol=tol)) == expected


def test_rank_of_gram_and_transpose():
    for seed in range(200):
        A = random_matrix(seed)
        r = numlin.rank(A)
        assert numlin.rank(A.T @ A) == r == numlin.rank(A.T)


# -------------------------------------------------------------------- pinv


def test_pinv_diagonal():
    assert_allclose(numlin.pinv(np.diag([1.0, 2.0, 3.0])), np.diag([1, 1 / 2, 1 / 3]), atol=1e-15)


def test_pinv_zero_has_transposed_shape():
    P = numlin.pinv(np.zeros((2, 3)))
    assert P.shape == (3, 2) and not P.any()


def test_pinv_rank_one_against_penrose_equations():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    candidate = 0.25 * A
    # oracle: the closed form satisfies the four equations exactly
    assert max(penrose_residuals(A, candidate)) == 0.0
    assert_allclose(numlin.pinv(A), candidate, atol=1e-15)


def test_pinv_null_space_is_range_complement(policy):
    A = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
    Ap = numlin.pinv(A, policy)
    for z in numlin.null_basis(A.T, policy).T:
        assert np.linalg.norm(Ap @ z) < 1e-14


def test_penrose_residuals_500_seeds(policy):
    worst = 0.0
    for seed in range(500):
        A = random_matrix(seed)
        r = max(penrose_residuals(A, numlin.pinv(A, policy))) / max(1.0, np.linalg.norm(A))
        worst = max(worst, r)
    assert worst <= policy.identity_tol


@settings(max_examples=80, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.integers(-4, 4).map(float)))
def test_pinv_involution_and_transpose(A):
    pol = TolerancePolicy(rank_rel_tol=1e-9)
    Ap = numlin.pinv(A, pol)
    scale = max(1.0, np.linalg.norm(A)) * max(1.0, np.linalg.norm(Ap)) ** 2
    assert np.linalg.norm(numlin.pinv(Ap, pol) - A) <= 1e-12 * scale
    assert np.linalg.norm(numlin.pinv(A.T, pol) - Ap.T) <= 1e-12 * scale


# -------------------------------------------------------------- projectors


def test_projectors_identity():
    assert_allclose(numlin.projector_range(np.eye(3)), np.eye(3), atol=1e-15)
    assert_allclose(numlin.projector_rowspace(np.eye(3)), np.eye(3), atol=1e-15)


def test_projector_range_rank_deficient():
    assert_allclose(numlin.projector_range(np.diag([1.0, 0.0])), np.diag([1.0, 0.0]), atol=1e-15)
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    expected = A @ (0.25 * A)  # A A+ from the closed-form pseudoinverse
    assert_allclose(expected, 0.5 * A)
    assert_allclose(numlin.projector_range(A), expected, atol=1e-15)


def test_projectors_match_pinv_products(policy):
    for seed in range(100):
        A = random_matrix(seed)
        Ap = numlin.pinv(A, policy)
        for P, ref in ((numlin.projector_range(A, policy), A @ Ap), (numlin.projector_rowspace(A, policy), Ap @ A)):
            assert np.linalg.norm(P - ref) < 1e-12
            assert np.linalg.norm(P @ P - P) < 1e-12
            assert np.linalg.norm(P - P.T) < 1e-15


def test_projectors_of_zero():
    assert not numlin.projector_range(np.zeros((3, 2))).any()
    assert not numlin.projector_rowspace(np.zeros((3, 2))).any()


# -------------------------------------------------------------------- nnls


def brute_force_nnls(G, x):
    """Minimum residual over all independent supports with nonnegative LS coefficients."""
    d, k = G.shape
    best = np.linalg.norm(x)
    for size in range(1, k + 1):
        for S in itertools.combinations(range(k), size):
            Gs = G[:, S]
            if np.linalg.matrix_rank(Gs) < size:
                continue
            c = np.linalg.lstsq(Gs, x, rcond=None)[0]
            if np.all(c >= -1e-12):
                best = min(best, np.linalg.norm(Gs @ c - x))
    return best


def test_nnls_identity():
    res = numlin.nnls(np.eye(2), [1.0, 2.0])
    assert_allclose(res.coeffs, [1, 2])
    assert res.residual == 0.0


def test_nnls_orthant_projection():
    res = numlin.nnls(np.eye(2), [-1.0, 0.0])
    assert_allclose(res.coeffs, [0, 0])
    assert res.residual == pytest.approx(1.0)


def test_nnls_two_generators_exact_oracle():
    # generators (1,0) and (1,1) as columns
    G = np.array([[1.0, 1.0], [0.0, 1.0]])
    exact = sympy.Matrix([[1, 1], [0, 1]]).LUsolve(sympy.Matrix([2, 1]))
    assert all(v >= 0 for v in exact)
    res = numlin.nnls(G, [2.0, 1.0])
    assert_allclose(res.coeffs, [float(v) for v in exact], atol=1e-14)
    assert res.residual < 1e-14


def test_nnls_matches_brute_force_and_scipy(rng):
    for _ in range(300):
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        G = rng.standard_normal((d, k))
        x = rng.standard_normal(d)
        res = numlin.nnls(G, x)
        assert np.all(res.coeffs >= 0)
        assert res.residual == pytest.approx(brute_force_nnls(G, x), abs=1e-10)
        assert res.residual == pytest.approx(scipy_nnls(G, x)[1], abs=1e-10)


def test_nnls_tie_breaks_to_lowest_index():
    G = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    res = numlin.nnls(G, [2.0, 0.0])
    assert_allclose(res.coeffs, [2.0, 0.0, 0.0])


def test_nnls_iteration_cap_reports_best_iterate():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((6, 10))
    x = rng.standard_normal(6)
    with pytest.raises(NnlsError) as info:
        numlin.nnls(G, x, max_iter=0)
    assert info.value.coeffs.shape == (10,)
    assert np.isfinite(info.value.residual)


def test_nnls_no_generators():
    res = numlin.nnls(np.zeros((2, 0)), [3.0, 4.0])
    assert res.residual == pytest.approx(5.0)
