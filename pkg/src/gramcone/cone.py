"""Polyhedral convex cones and the cone calculus used by the theorem checks.

A cone is stored in one of four forms:

``orthant``     the nonnegative orthant of R^dim (no data)
``simplicial``  columns of an invertible square matrix are the generators
``generated``   columns of a ``dim x k`` matrix are the generators
``inequality``  rows of a ``k x dim`` matrix are inward normals, ``Hx >= 0``

Generators and normals are kept at unit length so that acuteness and
membership tolerances do not depend on scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import numlin
from .numlin import DEFAULT_POLICY, TolerancePolicy

DD_DIM_CAP = 10

KINDS = ("orthant", "simplicial", "generated", "inequality")


class UnsupportedConversion(RuntimeError):
    """A representation change the package refuses to perform."""


class DimensionCapError(UnsupportedConversion):
    """Double description requested above the dimension cap."""


def _unit_columns(G, what="generator") -> np.ndarray:
    G = numlin.as_matrix(G).copy()
    norms = np.linalg.norm(G, axis=0)
    if np.any(norms == 0.0):
        raise ValueError(f"zero {what} in cone description")
    # skip columns already at unit length so re-normalizing is a no-op
    off = np.abs(norms - 1.0) > 4 * numlin.EPS
    G[:, off] /= norms[off]
    return G


@dataclass(frozen=True, eq=False)
class ConvexCone:
    kind: str
    dim: int
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        dim = int(self.dim)
        if dim < 1:
            raise ValueError("cone dimension must be positive")
        object.__setattr__(self, "dim", dim)
        M = self.matrix
        if self.kind == "orthant":
            if M is not None:
                raise ValueError("orthant cones carry no matrix")
            return
        if M is None:
            raise ValueError(f"{self.kind} cone needs a matrix")
        M = np.asarray(M, dtype=float)
        if self.kind == "generated" and M.size == 0:
            M = np.zeros((dim, 0))
        if self.kind == "inequality":
            if M.size == 0:
                M = np.zeros((0, dim))
            if M.ndim != 2 or M.shape[1] != dim:
                raise ValueError(f"inequality matrix must have {dim} columns")
            M = _unit_columns(M.T, "constraint row").T if M.shape[0] else M
        else:
            if M.ndim != 2 or M.shape[0] != dim:
                raise ValueError(f"generator matrix must have {dim} rows")
            if M.shape[1]:
                M = _unit_columns(M)
            if self.kind == "simplicial":
                if M.shape != (dim, dim) or numlin.rank(M) != dim:
                    raise ValueError("simplicial cone needs an invertible square generator matrix")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def orthant(cls, dim: int) -> "ConvexCone":
        return cls("orthant", dim)

    @classmethod
    def simplicial(cls, G) -> "ConvexCone":
        G = np.asarray(G, dtype=float)
        return cls("simplicial", G.shape[0], G)

    @classmethod
    def generated(cls, G, dim: Optional[int] = None) -> "ConvexCone":
        G = np.asarray(G, dtype=float)
        if G.size == 0:
            if dim is None:
                raise ValueError("dimension required for a cone without generators")
            return cls("generated", dim, np.zeros((dim, 0)))
        return cls("generated", G.shape[0], G)

    @classmethod
    def inequality(cls, H) -> "ConvexCone":
        H = np.asarray(H, dtype=float)
        return cls("inequality", H.shape[1], H)

    @classmethod
    def trivial(cls, dim: int) -> "ConvexCone":
        return cls.generated(np.zeros((dim, 0)), dim)

    @property
    def degenerate(self) -> bool:
        """True for the trivial cone {0} stored without generators."""
        return self.kind == "generated" and self.matrix.shape[1] == 0

    def generators(self, policy: TolerancePolicy = DEFAULT_POLICY, cap: int = DD_DIM_CAP) -> np.ndarray:
        """A generating set as columns; lineality directions appear as ``±b``."""
        if self.kind == "orthant":
            return np.eye(self.dim)
        if self.kind in ("simplicial", "generated"):
            return np.array(self.matrix)
        return double_description(self.matrix, policy=policy, cap=cap).generating_set()

    def inequalities(self, policy: TolerancePolicy = DEFAULT_POLICY, cap: int = DD_DIM_CAP) -> np.ndarray:
        """Inward normals as rows; an equality ``<b, x> = 0`` appears as ``±b``."""
        if self.kind == "orthant":
            return np.eye(self.dim)
        if self.kind == "inequality":
            return np.array(self.matrix)
        if self.kind == "simplicial":
            return _unit_columns(np.linalg.inv(self.matrix).T).T
        if self.matrix.shape[1] == 0:
            return np.vstack([np.eye(self.dim), -np.eye(self.dim)])
        return double_description(self.matrix.T, policy=policy, cap=cap).generating_set().T

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.matrix is not None:
            out["matrix"] = self.matrix.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexCone":
        kind = data.get("kind")
        if kind not in KINDS:
            raise ValueError(f"cone.kind must be one of {KINDS}, got {kind!r}")
        if "dim" not in data:
            raise ValueError("cone.dim is required")
        return cls(kind, int(data["dim"]), data.get("matrix"))


def dual(K: ConvexCone, policy: TolerancePolicy = DEFAULT_POLICY) -> ConvexCone:
    """Dual cone ``{x : <x, k> >= 0 for all k in K}``.

    The dual of ``{x : Hx >= 0}`` is generated by the rows of ``H``, so no
    ray enumeration is needed in any direction.
    """
    if K.kind == "orthant":
        return ConvexCone.orthant(K.dim)
    if K.kind == "simplicial":
        return ConvexCone.generated(np.linalg.inv(K.matrix).T)
    if K.kind == "generated":
        if K.degenerate:
            return ConvexCone.inequality(np.zeros((0, K.dim)))
        return ConvexCone.inequality(K.matrix.T)
    if K.matrix.shape[0] == 0:
        return ConvexCone.trivial(K.dim)
    return ConvexCone.generated(K.matrix.T)


@dataclass(frozen=True, eq=False)
class MembershipCertificate:
    """Outcome of a membership test.

    ``coeffs`` is present when ``verdict`` is true: nonnegative weights on
    the generators (for inequality cones, the constraint values ``Hx``).
    ``separator`` is present when ``verdict`` is false: a unit vector ``s``
    of the dual cone with ``<s, x> < 0``. ``slack`` is the signed violation
    scaled by ``max(1, ||x||)``; it is ``>= -membership_tol`` when inside.
    """

    verdict: bool
    slack: float
    coeffs: Optional[np.ndarray] = None
    separator: Optional[np.ndarray] = None

    def __bool__(self):
        return self.verdict

    def to_dict(self) -> dict:
        out = {"inside": self.verdict, "slack": self.slack}
        if self.coeffs is not None:
            out["coeffs"] = self.coeffs.tolist()
        if self.separator is not None:
            out["separator"] = self.separator.tolist()
        return out


def contains(K: ConvexCone, x, policy: TolerancePolicy = DEFAULT_POLICY) -> MembershipCertificate:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != K.dim:
        raise ValueError(f"vector of length {x.shape[0]} tested against cone of dimension {K.dim}")
    scale = max(1.0, float(np.linalg.norm(x)))
    tol = policy.membership_tol

    if K.kind in ("orthant", "inequality"):
        H = np.eye(K.dim) if K.kind == "orthant" else K.matrix
        if H.shape[0] == 0:
            return MembershipCertificate(True, 0.0, coeffs=np.zeros(0))
        vals = H @ x
        i = int(np.argmin(vals))
        slack = float(vals[i]) / scale
        if slack >= -tol:
            return MembershipCertificate(True, slack, coeffs=np.maximum(vals, 0.0))
        return MembershipCertificate(False, slack, separator=np.array(H[i]))

    res = numlin.nnls(K.matrix, x, policy)
    slack = -res.residual / scale
    if slack >= -tol:
        return MembershipCertificate(True, slack, coeffs=res.coeffs)
    # p - x with p the projection onto K lies in K* and has <s, x> = -|x - p|^2
    s = K.matrix @ res.coeffs - x
    return MembershipCertificate(False, slack, separator=s / np.linalg.norm(s))


def acuteness_slack(G) -> Tuple[float, Optional[Tuple[int, int]]]:
    """Smallest pairwise inner product among the unit-normalized columns of G.

    Returns ``(value, (i, j))``; an empty family gives ``(0.0, None)``.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[1] == 0:
        return 0.0, None
    norms = np.linalg.norm(G, axis=0)
    keep = np.flatnonzero(norms > 0)
    if keep.size == 0:
        return 0.0, None
    U = G[:, keep] / norms[keep]
    M = U.T @ U
    flat = int(np.argmin(M))
    i, j = divmod(flat, M.shape[1])
    return float(M[i, j]), (int(keep[i]), int(keep[j]))


def is_acute(K: ConvexCone, policy: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """All pairwise generator inner products are ``>= -membership_tol``.

    Checking generators suffices: every element of K is a nonnegative
    combination of them. The trivial cone counts as acute.
    """
    value, _ = acuteness_slack(K.generators(policy))
    return value >= -policy.membership_tol


def image_cone(T, K: ConvexCone, policy: TolerancePolicy = DEFAULT_POLICY) -> ConvexCone:
    """``T K`` as a generated cone; generators mapped to zero are dropped."""
    A = T.matrix if hasattr(T, "matrix") else numlin.as_matrix(T)
    if A.shape[1] != K.dim:
        raise ValueError(f"operator with {A.shape[1]} columns applied to cone of dimension {K.dim}")
    img = A @ K.generators(policy)
    norms = np.linalg.norm(img, axis=0)
    cutoff = policy.membership_tol * max(1.0, float(np.linalg.norm(A)))
    keep = norms > cutoff
    if not np.any(keep):
        return ConvexCone.trivial(A.shape[0])
    return ConvexCone.generated(img[:, keep] / norms[keep])


@dataclass(frozen=True, eq=False)
class RayDescription:
    """Extreme rays (columns) plus a lineality basis (columns)."""

    rays: np.ndarray
    lineality: np.ndarray

    @property
    def degenerate(self) -> bool:
        return self.lineality.shape[1] > 0

    def generating_set(self) -> np.ndarray:
        return np.hstack([self.rays, self.lineality, -self.lineality])

    def cone(self) -> ConvexCone:
        G = self.generating_set()
        return ConvexCone.generated(G, dim=self.rays.shape[0])


def _clean_rows(A, tol) -> np.ndarray:
    """Unit-normalize rows, dropping zero rows and repeated directions."""
    out = []
    for row in A:
        nrm = np.linalg.norm(row)
        if nrm <= tol:
            continue
        row = row / nrm
        if any(np.linalg.norm(row - r) <= tol for r in out):
            continue
        out.append(row)
    if not out:
        return np.zeros((0, A.shape[1]))
    return np.array(out)


def _abs_rank(A, tol) -> int:
    if A.shape[0] == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.count_nonzero(s > tol))


def _pointed_rays(A, tol, cap) -> np.ndarray:
    """Extreme rays of ``{y : A y >= 0}`` when ``A`` has full column rank."""
    m, k = A.shape
    if k == 0:
        return np.zeros((0, 0))
    if m == k:
        R = np.linalg.inv(A)
        return R / np.linalg.norm(R, axis=0)
    if k > cap:
        raise DimensionCapError(f"ray enumeration in dimension {k} exceeds cap {cap}")

    # initial simplicial cone from the first independent rows
    basis = []
    for i in range(m):
        if _abs_rank(A[basis + [i]], tol) > len(basis):
            basis.append(i)
            if len(basis) == k:
                break
    R = np.linalg.inv(A[basis])
    R /= np.linalg.norm(R, axis=0)
    done = list(basis)

    for i in range(m):
        if i in basis:
            continue
        a = A[i]
        vals = a @ R
        pos = vals > tol
        neg = vals < -tol
        tight = np.abs(A[done] @ R) <= tol
        new = []
        for p in np.flatnonzero(pos):
            for q in np.flatnonzero(neg):
                common = tight[:, p] & tight[:, q]
                if np.count_nonzero(common) < k - 2:
                    continue
                if _abs_rank(A[done][common], tol) != k - 2:
                    continue
                r = vals[p] * R[:, q] - vals[q] * R[:, p]
                new.append(r / np.linalg.norm(r))
        R = R[:, ~neg]
        if new:
            R = np.hstack([R, np.array(new).T])
        done.append(i)
        if R.shape[1] == 0:
            break

    uniq = []
    for r in R.T:
        if not any(np.linalg.norm(r - u) <= 1e3 * tol for u in uniq):
            uniq.append(r)
    return np.array(uniq).T if uniq else np.zeros((k, 0))


def double_description(
    H,
    subspace_basis=None,
    policy: TolerancePolicy = DEFAULT_POLICY,
    cap: int = DD_DIM_CAP,
) -> RayDescription:
    """Extreme rays of ``{x : H x >= 0}``, optionally inside a subspace.

    Parameters
    ----------
    H : array_like or ConvexCone
        Inward normals as rows, or an inequality cone.
    subspace_basis : array_like, optional
        Orthonormal columns spanning the subspace to intersect with. The
        constraints are rewritten in subspace coordinates before enumeration.
    cap : int
        Largest pointed dimension handed to the incremental enumeration.
        Simplicial cones (as many independent constraints as dimensions) are
        solved in closed form at any size.

    Returns
    -------
    RayDescription
        Unit rays and an orthonormal lineality basis, in ambient coordinates.
    """
    if isinstance(H, ConvexCone):
        if H.kind != "inequality":
            raise ValueError("double_description expects an inequality cone")
        H = H.matrix
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise ValueError("constraint matrix must be 2-D")
    d = H.shape[1]
    B = np.eye(d) if subspace_basis is None else np.asarray(subspace_basis, dtype=float).reshape(d, -1)
    r = B.shape[1]
    tol = policy.membership_tol
    if r == 0:
        return RayDescription(np.zeros((d, 0)), np.zeros((d, 0)))

    A = _clean_rows(H @ B, tol)
    if A.shape[0] == 0:
        return RayDescription(np.zeros((d, 0)), B.copy())
    L = numlin.null_basis(A, policy)
    if L.shape[1]:
        Q = numlin.null_basis(L.T, policy)
        A = _clean_rows(A @ Q, tol)
    else:
        Q = np.eye(r)
    rays = _pointed_rays(A, tol, cap)
    return RayDescription(B @ Q @ rays if rays.size else np.zeros((d, 0)), B @ L)
