"""Operators above raw matrices.

A :class:`MatrixOperator` stands for a closed-range, densely defined
operator at finite scale: its domain is the whole space, so both standing
assumptions hold automatically. The unbounded sequence-space and
differential-operator examples enter only through :func:`build_truncation`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict

import numpy as np

from . import numlin
from .numlin import DEFAULT_POLICY, TolerancePolicy


class AxiomError(RuntimeError):
    """The computed pseudoinverse fails its defining projector identities."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    matrix: np.ndarray
    policy: TolerancePolicy = DEFAULT_POLICY

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(numlin.as_matrix(self.matrix)))

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, MatrixOperator):
            return MatrixOperator(self.matrix @ other.matrix, self.policy)
        return self.matrix @ other

    def rank(self) -> int:
        return numlin.rank(self.matrix, self.policy)

    def with_policy(self, policy: TolerancePolicy) -> "MatrixOperator":
        return MatrixOperator(self.matrix, policy)


def _symmetrized(M) -> np.ndarray:
    return 0.5 * (M + M.T)


def adjoint(T: MatrixOperator) -> MatrixOperator:
    return MatrixOperator(T.matrix.T, T.policy)


def gram(T: MatrixOperator) -> MatrixOperator:
    """``T* T``, symmetrized to remove rounding asymmetry."""
    return MatrixOperator(_symmetrized(T.matrix.T @ T.matrix), T.policy)


def cogram(T: MatrixOperator) -> MatrixOperator:
    """``T T*``, symmetrized."""
    return MatrixOperator(_symmetrized(T.matrix @ T.matrix.T), T.policy)


def mp_inverse(T: MatrixOperator, verify: bool = True) -> MatrixOperator:
    """Moore-Penrose inverse, optionally checked against its projector axioms.

    The checks are ``T T+ = P_R(T)``, ``T+ T = P_N(T)^perp`` and that ``T+``
    annihilates ``R(T)^perp``, each within ``identity_tol`` relative to
    ``max(1, ||T||_F ||T+||_F)``.
    """
    A = T.matrix
    pol = T.policy
    Ap = numlin.pinv(A, pol)
    if verify:
        scale = max(1.0, np.linalg.norm(A) * np.linalg.norm(Ap))
        checks = {
            "range_projector": np.linalg.norm(A @ Ap - numlin.projector_range(A, pol)),
            "rowspace_projector": np.linalg.norm(Ap @ A - numlin.projector_rowspace(A, pol)),
            "null_of_pinv": np.linalg.norm(Ap @ numlin.null_basis(A.T, pol)),
        }
        bad = {k: v for k, v in checks.items() if v > pol.identity_tol * scale}
        if bad:
            raise AxiomError(f"pseudoinverse axioms violated: {bad}")
    return MatrixOperator(Ap, pol)


def least_squares_min_norm(T: MatrixOperator, y) -> np.ndarray:
    """Least-squares solution of ``T x = y`` with minimal norm, ``T+ y``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != T.shape[0]:
        raise ValueError(f"y has length {y.shape[0]}, operator codomain is {T.shape[0]}")
    return numlin.pinv(T.matrix, T.policy) @ y


@dataclass(frozen=True)
class IdentityReport:
    """Frobenius residuals of the pseudoinverse identities and their bound."""

    residuals: Dict[str, float]
    bound: float

    @property
    def passed(self) -> Dict[str, bool]:
        return {k: v <= self.bound for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    @property
    def worst(self) -> float:
        return max(self.residuals.values())


def verify_identities(T: MatrixOperator, tol: float = None) -> IdentityReport:
    """Residuals of the Gram and co-Gram pseudoinverse identities.

    The containment ``(T*T)+ T* ⊂ T+`` is checked as a matrix equality,
    which is what it reduces to when every domain is the whole space.
    """
    pol = T.policy
    A = T.matrix
    At = A.T
    pinv = lambda M: numlin.pinv(M, pol)  # noqa: E731
    Ap = pinv(A)
    Atp = pinv(At)
    G = _symmetrized(At @ A)
    H = _symmetrized(A @ At)
    Gp = pinv(G)
    Hp = pinv(H)
    res = {
        "gram_pinv": np.linalg.norm(Gp - Ap @ Atp),
        "cogram_pinv": np.linalg.norm(Hp - Atp @ Ap),
        "double_pinv": np.linalg.norm(pinv(Ap) - A),
        "adjoint_pinv": np.linalg.norm(Atp - Ap.T),
        "gram_representation": np.linalg.norm(Gp @ At - Ap),
        "cogram_representation": np.linalg.norm(At @ Hp - Ap),
    }
    if tol is None:
        tol = pol.identity_tol
    bound = tol * max(1.0, float(np.linalg.norm(A)))
    return IdentityReport({k: float(v) for k, v in res.items()}, bound)


class Family(str, Enum):
    EXAMPLE41 = "Example41"
    EXAMPLE42 = "Example42"
    EXAMPLE43 = "Example43"


@dataclass(frozen=True)
class TruncationSpec:
    family: Family
    level: int

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            raise ValueError(f"unknown truncation family {self.family!r}") from None
        object.__setattr__(self, "family", fam)
        if int(self.level) != self.level or self.level < 2:
            raise ValueError(f"truncation level must be an integer >= 2, got {self.level}")
        object.__setattr__(self, "level", int(self.level))

    def to_dict(self) -> dict:
        return {"family": self.family.value, "level": self.level}


@dataclass(frozen=True, eq=False)
class SingularSystem:
    """Spectral description ``T = sum_n sigma_n range_n domain_n^T``.

    ``domain`` and ``range`` hold the paired orthonormal families as columns,
    so ``T`` maps ``domain[:, n]`` to ``sigma[n] * range[:, n]`` and the
    pseudoinverse maps ``range[:, n]`` back to ``domain[:, n] / sigma[n]``.
    """

    sigma: np.ndarray
    domain: np.ndarray
    range: np.ndarray
    index: np.ndarray = field(default=None)

    def __post_init__(self):
        sigma = _frozen(np.reshape(self.sigma, -1))
        dom = _frozen(self.domain)
        rng = _frozen(self.range)
        if np.any(sigma <= 0):
            raise ValueError("singular values must be positive")
        if dom.shape[1] != sigma.size or rng.shape[1] != sigma.size:
            raise ValueError("one domain and one range vector per singular value")
        for name, fam in (("domain", dom), ("range", rng)):
            if np.linalg.norm(fam.T @ fam - np.eye(sigma.size)) > 1e-10:
                raise ValueError(f"{name} family is not orthonormal")
        idx = np.arange(1, sigma.size + 1) if self.index is None else np.asarray(self.index)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "range", rng)
        object.__setattr__(self, "index", idx)

    @property
    def shape(self):
        return (self.range.shape[0], self.domain.shape[0])

    def assemble(self) -> np.ndarray:
        return (self.range * self.sigma) @ self.domain.T


def spectral_pinv_apply(S: SingularSystem, y) -> np.ndarray:
    """Apply ``sum_n sigma_n^{-1} <y, range_n> domain_n``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return S.domain @ ((S.range.T @ y) / S.sigma)


def build_truncation(spec: TruncationSpec, policy: TolerancePolicy = DEFAULT_POLICY):
    """Finite section of one of the three worked examples.

    Returns ``(operator, singular_system)``.

    ``Example41`` is ``diag(1..N)`` on sequences and ``Example42`` is
    ``diag(0, 2, ..., N)``. ``Example43`` is ``d/dt`` on ``[0, pi]`` with
    Dirichlet conditions, written from sine coefficients (``sin(n t)``,
    ``n = 1..N``) to cosine coefficients. The range side carries one extra
    coordinate, index 0, for the constant mode that spans ``R(L)^perp``, so
    the matrix is ``(N + 1) x N`` and its Gram matrix is ``diag(n^2)``.
    """
    N = spec.level
    n = np.arange(1, N + 1, dtype=float)
    if spec.family is Family.EXAMPLE41:
        S = SingularSystem(n, np.eye(N), np.eye(N))
    elif spec.family is Family.EXAMPLE42:
        keep = np.arange(1, N)
        S = SingularSystem(n[keep], np.eye(N)[:, keep], np.eye(N)[:, keep], index=n[keep].astype(int))
    elif spec.family is Family.EXAMPLE43:
        S = SingularSystem(n, np.eye(N), np.eye(N + 1)[:, 1:])
    else:  # pragma: no cover - TruncationSpec validates the family
        raise ValueError(f"unknown truncation family {spec.family!r}")
    return MatrixOperator(S.assemble(), policy), S
