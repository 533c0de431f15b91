"""Deterministic instances: worked-example truncations and seeded random families.

Random instances are assembled as ``T = U M B^{-1} V^T`` where ``U`` and
``V`` have orthonormal columns, ``K`` is generated by the columns of
``V B`` (rank-deficient instances append up to two further generators
inside the row space) and ``M`` is an ``r x r`` core. Since ``K`` lies in the row space
of ``T``, ``T+ T`` fixes it and the hypothesis holds by construction.
With ``A = M^T M`` one has ``(T*T)+ K* ⊆ K`` iff ``A^{-1} >= 0``
entrywise (for the simplicial part), so drawing ``A`` as a diagonally dominant Stieltjes matrix gives
the positive class and a Gaussian ``M`` gives (mostly) the negative one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np

from .cone import ConvexCone
from .numlin import DEFAULT_POLICY, TolerancePolicy
from .operators import Family, MatrixOperator, TruncationSpec, build_truncation
from .theorem import GramInstance


class Kind(str, Enum):
    PAPER41 = "Paper41"
    PAPER42 = "Paper42"
    PAPER43 = "Paper43"
    RANDOM_FULL_RANK = "RandomFullRank"
    RANDOM_RANK_DEFICIENT = "RandomRankDeficient"
    RANDOM_SIMPLICIAL_CONE = "RandomSimplicialCone"
    COUNTEREXAMPLE_2X2 = "Counterexample2x2"


PAPER_KINDS = (Kind.PAPER41, Kind.PAPER42, Kind.PAPER43)
RANDOM_KINDS = (Kind.RANDOM_FULL_RANK, Kind.RANDOM_RANK_DEFICIENT, Kind.RANDOM_SIMPLICIAL_CONE)
_FAMILY = {Kind.PAPER41: Family.EXAMPLE41, Kind.PAPER42: Family.EXAMPLE42, Kind.PAPER43: Family.EXAMPLE43}


@dataclass(frozen=True)
class InstanceSpec:
    """``level_or_dims`` is ``N`` for the model-operator kinds, ``(m, n, rank)`` for
    random kinds and ignored for the counterexample."""

    kind: Kind
    seed: int = 0
    level_or_dims: Union[int, Tuple[int, int, int], None] = None

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise ValueError(f"unknown instance kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))
        lod = self.level_or_dims
        if kind in PAPER_KINDS:
            if not isinstance(lod, (int, np.integer)) or isinstance(lod, bool) or lod < 2:
                raise ValueError(f"{kind.value} needs a truncation level >= 2")
            object.__setattr__(self, "level_or_dims", int(lod))
        elif kind in RANDOM_KINDS:
            if not isinstance(lod, (tuple, list)) or len(lod) != 3:
                raise ValueError(f"{kind.value} needs (m, n, rank)")
            m, n, r = (int(v) for v in lod)
            if min(m, n, r) < 1 or r > min(m, n):
                raise ValueError(f"invalid dims (m={m}, n={n}, rank={r})")
            if kind is Kind.RANDOM_RANK_DEFICIENT and r >= n:
                raise ValueError("rank-deficient instances need rank < n")
            if kind is not Kind.RANDOM_RANK_DEFICIENT and r != n:
                raise ValueError(f"{kind.value} needs full column rank (rank == n <= m)")
            object.__setattr__(self, "level_or_dims", (m, n, r))

    def to_dict(self) -> dict:
        lod = self.level_or_dims
        return {"kind": self.kind.value, "seed": self.seed, "level_or_dims": list(lod) if isinstance(lod, tuple) else lod}

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        lod = data.get("level_or_dims")
        if isinstance(lod, list):
            lod = tuple(lod)
        return cls(data["kind"], data.get("seed", 0), lod)


def _orthonormal(rng, n, r) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, r)))
    return Q * np.sign(np.diag(R))


def _well_conditioned(rng, r, draw, max_cond=25.0) -> np.ndarray:
    while True:
        M = draw(rng, r)
        if np.linalg.cond(M) <= max_cond:
            return M


def _stieltjes(rng, r) -> np.ndarray:
    """Symmetric, strictly diagonally dominant, nonpositive off-diagonal."""
    off = -rng.uniform(0.1, 1.0, (r, r)) * (rng.random((r, r)) < 0.6)
    off = np.triu(off, 1)
    off = off + off.T
    return off + np.diag(-off.sum(axis=1) + rng.uniform(0.3, 1.5, r))


def _random_instance(spec: InstanceSpec, policy: TolerancePolicy) -> GramInstance:
    m, n, r = spec.level_or_dims
    rng = np.random.default_rng([spec.seed, list(Kind).index(spec.kind), m, n, r])
    U = _orthonormal(rng, m, r)
    V = _orthonormal(rng, n, r)
    if spec.kind is Kind.RANDOM_FULL_RANK:
        B = V.T  # K is the orthant
    else:
        B = _well_conditioned(rng, r, lambda g, k: np.eye(k) + 0.6 * g.standard_normal((k, k)))
    if rng.random() < 0.5:
        L = np.linalg.cholesky(_stieltjes(rng, r))
        M = _orthonormal(rng, r, r) @ L.T
    else:
        M = _well_conditioned(rng, r, lambda g, k: g.standard_normal((k, k)))
    T = U @ M @ np.linalg.solve(B, V.T)  # U M B^{-1} V^T
    if spec.kind is Kind.RANDOM_FULL_RANK:
        cone = ConvexCone.orthant(n)
    elif spec.kind is Kind.RANDOM_SIMPLICIAL_CONE:
        cone = ConvexCone.simplicial(V @ B)
    else:
        extra = int(rng.integers(0, 3))
        if rng.random() < 0.5:
            W = B @ rng.random((r, extra))  # redundant: inside cone(B)
        else:
            W = rng.standard_normal((r, extra))
        W = W[:, np.linalg.norm(W, axis=0) > 1e-3]
        cone = ConvexCone.generated(V @ np.hstack([B, W]))
    return GramInstance(MatrixOperator(T, policy), cone, None, policy)


def make(spec: InstanceSpec, policy: TolerancePolicy = DEFAULT_POLICY) -> GramInstance:
    kind = spec.kind
    if kind is Kind.COUNTEREXAMPLE_2X2:
        T = MatrixOperator([[1.0, 1.0], [0.0, 1.0]], policy)
        return GramInstance(T, ConvexCone.orthant(2), None, policy)
    if kind in PAPER_KINDS:
        N = spec.level_or_dims
        T, _ = build_truncation(TruncationSpec(_FAMILY[kind], N), policy)
        if kind is Kind.PAPER42:
            # kernel is the first coordinate; the cone lives in coordinates 2..N
            E = np.eye(N)
            cone = ConvexCone.generated(E[:, 1:])
            dual_gens = np.hstack([E[:, :1], -E[:, :1], E[:, 1:]])
            return GramInstance(T, cone, dual_gens, policy)
        return GramInstance(T, ConvexCone.orthant(N), np.eye(N), policy)
    return _random_instance(spec, policy)


def sweep_spec(seed: int, dims: Tuple[int, int] = (6, 6)) -> InstanceSpec:
    """Random-family spec for one sweep seed, with ``m <= dims[0]``, ``n <= dims[1]``."""
    m_cap, n_cap = dims
    rng = np.random.default_rng([seed, 7919])
    kind = RANDOM_KINDS[int(rng.integers(3))]
    if kind is Kind.RANDOM_RANK_DEFICIENT and n_cap >= 2:
        n = int(rng.integers(2, n_cap + 1))
        m = int(rng.integers(1, m_cap + 1))
        r = int(rng.integers(1, min(m, n - 1) + 1))
        return InstanceSpec(kind, seed, (m, n, r))
    if kind is Kind.RANDOM_RANK_DEFICIENT:
        kind = Kind.RANDOM_SIMPLICIAL_CONE
    n = int(rng.integers(1, min(m_cap, n_cap) + 1))
    m = int(rng.integers(n, m_cap + 1))
    return InstanceSpec(kind, seed, (m, n, n))


def random_matrix(seed: int, dims: Tuple[int, int] = (12, 12)) -> np.ndarray:
    """Seeded test matrix with ``m <= dims[0]``, ``n <= dims[1]`` and random rank.

    Nonzero singular values are drawn from ``[0.5, 3]`` so that the
    Gram-level identities are not dominated by conditioning.
    """
    rng = np.random.default_rng([seed, 104729])
    m = int(rng.integers(1, dims[0] + 1))
    n = int(rng.integers(1, dims[1] + 1))
    r = int(rng.integers(0, min(m, n) + 1))
    U = _orthonormal(rng, m, r) if r else np.zeros((m, 0))
    V = _orthonormal(rng, n, r) if r else np.zeros((n, 0))
    return (U * rng.uniform(0.5, 3.0, r)) @ V.T
