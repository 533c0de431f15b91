"""Dense numerical kernels shared by every other module.

All routines take an explicit :class:`TolerancePolicy`; there are no module
level tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

EPS = np.finfo(float).eps


class SvdError(RuntimeError):
    """Raised when the SVD routine fails to converge."""


class NnlsError(RuntimeError):
    """Raised when the active-set iteration exceeds its cap.

    The best iterate found so far is kept on ``coeffs`` and ``residual``.
    """

    def __init__(self, message, coeffs, residual):
        super().__init__(message)
        self.coeffs = coeffs
        self.residual = residual


@dataclass(frozen=True)
class TolerancePolicy:
    """Tolerances used throughout the package.

    Parameters
    ----------
    rank_rel_tol : float or None
        Relative singular-value cutoff. ``None`` selects the shape dependent
        default ``max(m, n) * eps * 64``.
    membership_tol : float
        Slack allowed in cone membership and acuteness tests.
    identity_tol : float
        Bound on operator-identity residuals.
    """

    rank_rel_tol: Optional[float] = None
    membership_tol: float = 1e-9
    identity_tol: float = 1e-9

    def __post_init__(self):
        if self.rank_rel_tol is not None and not 0.0 < self.rank_rel_tol < 1.0:
            raise ValueError("rank_rel_tol must lie in (0, 1)")
        if not self.membership_tol > 0.0:
            raise ValueError("membership_tol must be positive")
        if not self.identity_tol > 0.0:
            raise ValueError("identity_tol must be positive")

    def rank_cutoff(self, shape: Tuple[int, int]) -> float:
        if self.rank_rel_tol is not None:
            return self.rank_rel_tol
        return max(max(shape), 1) * EPS * 64

    def to_dict(self) -> dict:
        return {
            "rank_rel_tol": self.rank_rel_tol,
            "membership_tol": self.membership_tol,
            "identity_tol": self.identity_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TolerancePolicy":
        known = {"rank_rel_tol", "membership_tol", "identity_tol"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown policy field(s): {sorted(unknown)}")
        kwargs = {k: (None if v is None else float(v)) for k, v in data.items()}
        if kwargs.get("membership_tol", 1.0) is None or kwargs.get("identity_tol", 1.0) is None:
            raise ValueError("membership_tol and identity_tol may not be null")
        return cls(**kwargs)


DEFAULT_POLICY = TolerancePolicy()


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = U @ diag(s) @ Vt`` with ``s`` nonincreasing."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.vt.T

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a finite 2-D float array, raising otherwise."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def svd(A) -> SvdFactors:
    A = as_matrix(A)
    m, n = A.shape
    k = min(m, n)
    if k == 0:
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((0, n)))
    try:
        u, s, vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD failed for {m}x{n} matrix: {exc}") from exc
    return SvdFactors(u, s, vt)


def numeric_rank(s, policy: TolerancePolicy = DEFAULT_POLICY, shape=None) -> int:
    """Count singular values above ``rank_cutoff * s[0]``.

    ``shape`` is only consulted when the policy uses the shape dependent
    default cutoff; it defaults to ``(len(s), len(s))``.
    """
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    if shape is None:
        shape = (s.size, s.size)
    return int(np.count_nonzero(s > policy.rank_cutoff(shape) * s[0]))


def _rank_of(A, policy: TolerancePolicy) -> Tuple[SvdFactors, int]:
    f = svd(A)
    return f, numeric_rank(f.s, policy, np.shape(A))


def rank(A, policy: TolerancePolicy = DEFAULT_POLICY) -> int:
    return _rank_of(A, policy)[1]


def pinv(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Moore-Penrose pseudoinverse by inverting the retained singular values."""
    A = as_matrix(A)
    f, r = _rank_of(A, policy)
    if r == 0:
        return np.zeros(A.shape[::-1])
    return (f.vt[:r].T / f.s[:r]) @ f.u[:, :r].T


def range_basis(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of ``A``."""
    f, r = _rank_of(A, policy)
    return f.u[:, :r]


def rowspace_basis(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis (as columns) of the row space of ``A``."""
    f, r = _rank_of(A, policy)
    return f.vt[:r].T


def null_basis(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of ``A``."""
    A = as_matrix(A)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    try:
        _, s, vt = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdError(str(exc)) from exc
    r = numeric_rank(s, policy, A.shape)
    return vt[r:].T


def projector_range(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthogonal projector onto R(A); equals ``A @ pinv(A)``."""
    U = range_basis(A, policy)
    return U @ U.T


def projector_rowspace(A, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthogonal projector onto N(A)^perp; equals ``pinv(A) @ A``.

    For a matrix this is also the projector onto the carrier of the
    operator, the finite-scale image of its pseudoinverse.
    """
    V = rowspace_basis(A, policy)
    return V @ V.T


@dataclass(frozen=True)
class NnlsResult:
    coeffs: np.ndarray
    residual: float
    iterations: int


def nnls(G, x, policy: TolerancePolicy = DEFAULT_POLICY, max_iter=None) -> NnlsResult:
    """Solve ``min ||G c - x||`` subject to ``c >= 0`` (Lawson-Hanson).

    Parameters
    ----------
    G : array_like, shape (d, k)
        Generators as columns.
    x : array_like, shape (d,)
        Target vector.
    max_iter : int, optional
        Cap on the number of inner steps (default ``30 * (k + 1)``).

    Returns
    -------
    NnlsResult
        Nonnegative coefficients, residual norm and the number of steps.

    Notes
    -----
    Candidates entering the passive set are chosen by largest dual value,
    ties going to the lowest index. A candidate whose unconstrained
    coefficient comes out nonpositive is blocked until the next successful
    step, which prevents the classic add/drop cycle on degenerate data.
    """
    G = as_matrix(G)
    x = np.asarray(x, dtype=float).reshape(-1)
    d, k = G.shape
    if x.shape[0] != d:
        raise ValueError(f"dimension mismatch: G has {d} rows, x has {x.shape[0]}")
    c = np.zeros(k)
    if k == 0:
        return NnlsResult(c, float(np.linalg.norm(x)), 0)
    if max_iter is None:
        max_iter = 30 * (k + 1)

    scale = max(1.0, float(np.linalg.norm(x))) * max(1.0, float(np.max(np.linalg.norm(G, axis=0))))
    tol = 10 * EPS * max(d, k) * scale
    passive = np.zeros(k, dtype=bool)
    blocked = np.zeros(k, dtype=bool)
    iterations = 0

    def solve_on(mask):
        z = np.zeros(k)
        if np.any(mask):
            z[mask] = np.linalg.lstsq(G[:, mask], x, rcond=None)[0]
        return z

    while True:
        w = G.T @ (x - G @ c)
        candidates = ~passive & ~blocked & (w > tol)
        if not np.any(candidates):
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        z = solve_on(passive)
        if z[j] <= 0.0:
            passive[j] = False
            blocked[j] = True
            continue
        while np.any(z[passive] <= 0.0):
            iterations += 1
            if iterations > max_iter:
                raise NnlsError(
                    f"NNLS exceeded {max_iter} iterations",
                    c.copy(),
                    float(np.linalg.norm(G @ c - x)),
                )
            bad = passive & (z <= 0.0)
            alpha = np.min(c[bad] / (c[bad] - z[bad]))
            c = c + alpha * (z - c)
            passive &= c > tol
            c[~passive] = 0.0
            z = solve_on(passive)
        c = z
        blocked[:] = False
        iterations += 1
        if iterations > max_iter:
            raise NnlsError(
                f"NNLS exceeded {max_iter} iterations", c.copy(), float(np.linalg.norm(G @ c - x))
            )

    c = np.maximum(c, 0.0)
    return NnlsResult(c, float(np.linalg.norm(G @ c - x)), iterations)
