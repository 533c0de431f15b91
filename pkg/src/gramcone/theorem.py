"""Six-way characterization of nonnegativity of ``(T*T)+`` with respect to a cone.

For an operator ``T`` and a closed convex cone ``K`` with ``T+ T K ⊆ K``,
with ``C = T K`` and ``D = (T+)* K*``, the following are equivalent:

c1  ``(T*T)+ K* ⊆ K``
c2  ``C* ∩ R(T) ⊆ C``
c3  ``D`` is acute
c4  ``C* ∩ R(T)`` is acute
c5  ``T*T x ∈ P_R(T*) K*  ⇒  x ∈ K``
c6  ``T*T x ∈ K*  ⇒  x ∈ K``

c5 and c6 are evaluated for ``x`` in the carrier ``R(T*)``: c5 through the
minimal-norm solution ``x = (T*T)+ w``, c6 by enumerating the cone of
solutions inside ``R(T*)``. Unrestricted versions, which also range over
``x + N(T)``, are available as strict checks and are reported separately.

Every checker reduces its condition to finitely many tests on generators
and returns a :class:`ConditionResult` holding a three-way verdict.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from . import numlin
from .cone import (
    DD_DIM_CAP,
    ConvexCone,
    UnsupportedConversion,
    acuteness_slack,
    contains,
    double_description,
    dual,
    image_cone,
)
from .numlin import DEFAULT_POLICY, TolerancePolicy
from .operators import MatrixOperator, gram

log = logging.getLogger(__name__)

MARGINAL = "marginal"
NOT_EVALUATED = "not_evaluated"
MARGIN_FACTOR = 10.0

Verdict = Union[bool, str]
CONDITIONS = ("c1", "c2", "c3", "c4", "c5", "c6")


class HypothesisError(ValueError):
    """``T+ T K ⊆ K`` fails, so the equivalence does not apply."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness or {}


@dataclass(frozen=True, eq=False)
class GramInstance:
    operator: MatrixOperator
    cone: ConvexCone
    dual_generators: Optional[np.ndarray] = None
    policy: TolerancePolicy = DEFAULT_POLICY

    def __post_init__(self):
        if self.operator.shape[1] != self.cone.dim:
            raise ValueError(
                f"operator has {self.operator.shape[1]} columns but the cone lives in R^{self.cone.dim}"
            )
        if self.operator.policy != self.policy:
            object.__setattr__(self, "operator", self.operator.with_policy(self.policy))
        if self.dual_generators is not None:
            D = numlin.as_matrix(self.dual_generators)
            if D.shape[0] != self.cone.dim:
                raise ValueError("dual generators must be columns of length cone.dim")
            D.setflags(write=False)
            object.__setattr__(self, "dual_generators", D)

    @property
    def T(self) -> np.ndarray:
        return self.operator.matrix

    def with_policy(self, policy: TolerancePolicy) -> "GramInstance":
        return GramInstance(self.operator.with_policy(policy), self.cone, self.dual_generators, policy)


@dataclass
class ConditionResult:
    verdict: Verdict
    slack: Optional[float] = None
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "slack": self.slack, "witness": self.witness}


def classify(slack: Optional[float], policy: TolerancePolicy) -> Verdict:
    """True above ``-tol``, false below ``-10 tol``, marginal in between."""
    if slack is None:
        return True
    tol = policy.membership_tol
    if slack >= -tol:
        return True
    if slack < -MARGIN_FACTOR * tol:
        return False
    return MARGINAL


def _vec(v) -> list:
    return np.asarray(v, dtype=float).tolist()


class _Cache:
    """Per-instance derived quantities shared by the checkers."""

    def __init__(self, inst: GramInstance):
        self.inst = inst
        pol = inst.policy
        T = inst.T
        self.f = numlin.svd(T)
        self.rank = numlin.numeric_rank(self.f.s, pol, T.shape)
        self.range_basis = self.f.u[:, : self.rank]
        self.row_basis = self.f.vt[: self.rank].T
        self.P_row = self.row_basis @ self.row_basis.T
        self.kernel_basis = numlin.null_basis(T, pol)
        self.Tp = numlin.pinv(T, pol)
        self.G = gram(inst.operator).matrix
        self.Gp = numlin.pinv(self.G, pol)
        self._K_gens = None
        self._dual_gens = None
        self._cstar_rays = None
        self._C = None

    def K_gens(self) -> np.ndarray:
        if self._K_gens is None:
            self._K_gens = self.inst.cone.generators(self.inst.policy)
        return self._K_gens

    def dual_gens(self) -> np.ndarray:
        if self._dual_gens is None:
            if self.inst.dual_generators is not None:
                self._dual_gens = np.array(self.inst.dual_generators)
            else:
                self._dual_gens = dual(self.inst.cone, self.inst.policy).generators(self.inst.policy)
        return self._dual_gens

    def C(self) -> ConvexCone:
        if self._C is None:
            self._C = image_cone(self.inst.operator, ConvexCone.generated(self.K_gens()), self.inst.policy)
        return self._C

    def cstar_in_range(self):
        """Rays and lineality of ``C* ∩ R(T)``."""
        if self._cstar_rays is None:
            C = self.C()
            self._cstar_rays = double_description(C.matrix.T, self.range_basis, self.inst.policy)
        return self._cstar_rays

    def negligible(self, d) -> bool:
        """True when ``d`` has no component in ``R(T*)`` beyond rounding."""
        return np.linalg.norm(self.P_row @ d) <= self.inst.policy.membership_tol * max(1.0, np.linalg.norm(d))


def _membership_sweep(K: ConvexCone, vectors, policy, labels=None) -> ConditionResult:
    """Test unit-normalized columns for membership in ``K``; report the worst."""
    worst = None
    witness = {}
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            continue
        cert = contains(K, v / nrm, policy)
        if worst is None or cert.slack < worst:
            worst = cert.slack
            witness = {"index": j, "vector": _vec(v / nrm), "certificate": cert.to_dict()}
            if labels is not None:
                witness.update(labels(j))
    return ConditionResult(classify(worst, policy), worst, witness if worst is not None and worst < -policy.membership_tol else {})


def _acute_result(G, policy, extra=None) -> ConditionResult:
    value, pair = acuteness_slack(G)
    verdict = classify(value, policy) if pair is not None else True
    witness = {}
    if pair is not None and value < -policy.membership_tol:
        i, j = pair
        witness = {"pair": [i, j], "first": _vec(G[:, i]), "second": _vec(G[:, j]), "inner": value}
    if extra:
        witness.update(extra)
    return ConditionResult(verdict, value if pair is not None else None, witness)


def check_hypothesis(inst: GramInstance, _cache: _Cache = None):
    """``T+ T g ∈ K`` for every generator ``g`` of ``K``.

    Returns ``(holds, witness)``. A one-to-one ``T`` passes immediately,
    since then ``T+ T`` is the identity.
    """
    c = _cache or _Cache(inst)
    if c.rank == inst.T.shape[1]:
        return True, {"one_to_one": True}
    G = c.K_gens()
    imgs = c.P_row @ G
    for j in range(G.shape[1]):
        if c.negligible(G[:, j]):
            imgs[:, j] = 0.0
    res =_membership_sweep(inst.cone, imgs, inst.policy)
    ok = res.verdict is True
    return ok, ({} if ok else {"generator_index": res.witness.get("index"), **res.witness})


def cond1_pinv_nonneg(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """``(T*T)+ d ∈ K`` for every generator ``d`` of ``K*``."""
    c = _cache or _Cache(inst)
    try:
        D = c.dual_gens()
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    imgs = c.Gp @ D
    for j in range(D.shape[1]):
        if c.negligible(D[:, j]):
            imgs[:, j] = 0.0
    return _membership_sweep(inst.cone, imgs, inst.policy, lambda j: {"dual_generator": _vec(D[:, j])})


def cond2_dualcone_inclusion(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """Every ray (and lineality direction) of ``C* ∩ R(T)`` lies in ``C``."""
    c = _cache or _Cache(inst)
    try:
        rd = c.cstar_in_range()
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    return _membership_sweep(c.C(), rd.generating_set(), inst.policy)


def cond3_D_acute(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """Generators ``(T+)* d`` of ``D`` are pairwise at nonnegative inner product.

    The same quantity is computed a second way, as ``<d_i, (T*T)+ d_j>``
    rescaled by the generator norms; the difference is reported as
    ``cross_check``.
    """
    c = _cache or _Cache(inst)
    try:
        Dg = c.dual_gens()
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    keep = [j for j in range(Dg.shape[1]) if not c.negligible(Dg[:, j])]
    Dg = Dg[:, keep]
    gens = c.Tp.T @ Dg
    norms = np.linalg.norm(gens, axis=0)
    if gens.shape[1]:
        direct = (gens / norms).T @ (gens / norms)
        via_gram = (Dg.T @ c.Gp @ Dg) / np.outer(norms, norms)
        cross = float(np.max(np.abs(direct - via_gram)))
    else:
        cross = 0.0
    return _acute_result(gens, inst.policy, {"cross_check": cross})


def cond4_Cstar_acute(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """Rays of ``C* ∩ R(T)`` (with ``±`` lineality) are pairwise acute."""
    c = _cache or _Cache(inst)
    try:
        rd = c.cstar_in_range()
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    return _acute_result(rd.generating_set(), inst.policy)


def cond5_projected_monotone(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """For each generator ``w`` of ``K*``, the minimal-norm solution of
    ``T*T x = P_R(T*) w`` lies in ``K``.

    The solution is formed as ``T+ (T+)* w``, a different factorization
    from the one c1 uses; its equation residual is kept in the witness.
    """
    c = _cache or _Cache(inst)
    try:
        W = c.dual_gens()
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    X = c.Tp @ (c.Tp.T @ W)
    for j in range(W.shape[1]):
        if c.negligible(W[:, j]):
            X[:, j] = 0.0
    eq_res = float(np.linalg.norm(c.G @ X - c.P_row @ W)) if W.size else 0.0
    out = _membership_sweep(inst.cone, X, inst.policy, lambda j: {"dual_generator": _vec(W[:, j])})
    out.witness["equation_residual"] = eq_res
    return out


def _solution_cone(c: _Cache, subspace):
    """Rays of ``{x ∈ subspace : <x, T*T g> >= 0 for all generators g of K}``."""
    Kg = c.K_gens()
    H = (c.G @ Kg).T
    scale = np.linalg.norm(c.G, 2)
    if scale > 0:
        H = H / scale
    # kernel generators impose no constraint; drop their rounding noise
    for j in range(Kg.shape[1]):
        if c.negligible(Kg[:, j]):
            H[j] = 0.0
    return double_description(H, subspace, c.inst.policy)


def cond6_monotone(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """Every ray of ``{x ∈ R(T*) : T*T x ∈ K*}`` lies in ``K``.

    A false verdict's witness ``x`` satisfies ``T*T x ∈ K*`` and comes with
    a separating certificate showing ``x ∉ K``.
    """
    c = _cache or _Cache(inst)
    try:
        rd = _solution_cone(c, c.row_basis)
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    return _membership_sweep(inst.cone, rd.generating_set(), inst.policy)


def cond5_strict(inst: GramInstance, samples: int = 20, seed: int = 0, _cache: _Cache = None) -> ConditionResult:
    """cond5 also tested at ``x + n`` for sampled kernel vectors ``n``."""
    c = _cache or _Cache(inst)
    base = cond5_projected_monotone(inst, c)
    Nk = c.kernel_basis
    if base.verdict is not True or Nk.shape[1] == 0:
        return base
    W = c.dual_gens()
    X = c.Tp @ (c.Tp.T @ W)
    rng = np.random.default_rng(seed)
    cols = []
    for j in range(X.shape[1]):
        scale = max(1.0, np.linalg.norm(X[:, j]))
        for _ in range(samples):
            cols.append(X[:, j] + scale * (Nk @ rng.standard_normal(Nk.shape[1])))
    return _membership_sweep(inst.cone, np.array(cols).T, inst.policy)


def cond6_strict(inst: GramInstance, _cache: _Cache = None) -> ConditionResult:
    """cond6 over all of ``R^n``; kernel directions must then lie in ``K``."""
    c = _cache or _Cache(inst)
    try:
        rd = _solution_cone(c, None)
    except UnsupportedConversion as exc:
        return ConditionResult(NOT_EVALUATED, witness={"reason": str(exc)})
    return _membership_sweep(inst.cone, rd.generating_set(), inst.policy)


@dataclass
class LemmaReport:
    uinco_ok: bool
    uinco_slack: Optional[float]
    acute: Optional[bool]
    gram_positive: Optional[bool]
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "dual_pullback": {"ok": self.uinco_ok, "slack": self.uinco_slack},
            "acute_vs_gram_positive": {"acute": self.acute, "gram_positive": self.gram_positive},
            "violations": self.violations,
        }


def lemma_checks(inst: GramInstance, samples: int = 200, seed: int = 0, _cache: _Cache = None) -> LemmaReport:
    """Two helper facts behind the equivalence.

    (a) ``T* u ∈ K*`` for every ray ``u`` of ``C* ∩ R(T)``; this holds for
    any instance, whether or not the six conditions do.
    (b) ``C* ∩ R(T)`` is acute exactly when ``<T*T x, y> >= 0`` for all
    ``x, y`` with ``T*T x, T*T y ∈ K*``. The right side is evaluated on
    ray pairs of the solution cone and on random nonnegative combinations.
    """
    c = _cache or _Cache(inst)
    pol = inst.policy
    tol = pol.membership_tol
    try:
        U = c.cstar_in_range().generating_set()
        S = _solution_cone(c, None).generating_set()
    except UnsupportedConversion as exc:
        log.info("lemma checks skipped: %s", exc)
        return LemmaReport(True, None, None, None, violations=[])

    Kg = c.K_gens()
    pulled = inst.T.T @ U
    uinco_slack = None
    if pulled.size and Kg.size:
        norms = np.maximum(np.linalg.norm(pulled, axis=0), 1.0)
        uinco_slack = float(np.min((Kg / np.linalg.norm(Kg, axis=0)).T @ (pulled / norms)))
    uinco_ok = uinco_slack is None or uinco_slack >= -tol

    acute_val, pair = acuteness_slack(U)
    acute = pair is None or acute_val >= -tol

    TS = inst.T @ S
    rng = np.random.default_rng(seed)
    if S.shape[1]:
        TS = np.hstack([TS, TS @ rng.random((S.shape[1], samples))])
    nrm = np.linalg.norm(TS, axis=0)
    TS = TS[:, nrm > tol * max(1.0, np.linalg.norm(inst.T))]
    gram_val, gpair = acuteness_slack(TS)
    gram_positive = gpair is None or gram_val >= -tol

    violations = []
    if not uinco_ok:
        violations.append(f"T* u left K* (slack {uinco_slack:.3e})")
    if classify(acute_val if pair else None, pol) in (True, False) and classify(
        gram_val if gpair else None, pol
    ) in (True, False) and acute != gram_positive:
        violations.append(f"acuteness {acute} but Gram positivity {gram_positive}")
    return LemmaReport(uinco_ok, uinco_slack, acute, gram_positive, violations)


@dataclass
class ConditionReport:
    results: Dict[str, ConditionResult]
    hypothesis: dict = field(default_factory=dict)
    strict: Dict[str, ConditionResult] = field(default_factory=dict)

    @property
    def verdicts(self) -> Dict[str, Verdict]:
        return {k: self.results[k].verdict for k in CONDITIONS}

    @property
    def definite(self) -> Dict[str, bool]:
        return {k: v for k, v in self.verdicts.items() if v is True or v is False}

    @property
    def agree(self) -> bool:
        return len(set(self.definite.values())) <= 1

    @property
    def marginal(self) -> bool:
        return any(v == MARGINAL for v in self.verdicts.values())

    @property
    def fully_evaluated(self) -> bool:
        return all(v != NOT_EVALUATED for v in self.verdicts.values())

    @property
    def outcome(self) -> str:
        """``all_true``, ``all_false``, ``marginal``, ``not_evaluated`` or ``disagree``."""
        if not self.agree:
            return "disagree"
        if self.marginal:
            return MARGINAL
        if not self.fully_evaluated:
            return NOT_EVALUATED
        return "all_true" if all(self.definite.values()) else "all_false"

    def to_dict(self) -> dict:
        out = {
            "verdicts": self.verdicts,
            "agree": self.agree,
            "outcome": self.outcome,
            "witnesses": {k: self.results[k].witness for k in CONDITIONS},
            "residual_summary": {k: self.results[k].slack for k in CONDITIONS},
            "hypothesis": self.hypothesis,
        }
        if self.strict:
            out["strict"] = {k: v.to_dict() for k, v in self.strict.items()}
        return out


def equivalence_report(inst: GramInstance, strict: bool = False, seed: int = 0) -> ConditionReport:
    """Evaluate all six conditions; refuse when the hypothesis fails.

    Conditions whose enumeration exceeds the dimension cap are reported as
    ``not_evaluated`` and do not count against agreement; neither do
    ``marginal`` ones.
    """
    c = _Cache(inst)
    ok, hyp_witness = check_hypothesis(inst, c)
    if not ok:
        raise HypothesisError("T+ T K is not contained in K", hyp_witness)
    checkers = (
        cond1_pinv_nonneg,
        cond2_dualcone_inclusion,
        cond3_D_acute,
        cond4_Cstar_acute,
        cond5_projected_monotone,
        cond6_monotone,
    )
    results = {name: fn(inst, c) for name, fn in zip(CONDITIONS, checkers)}
    report = ConditionReport(results, {"holds": True, **hyp_witness})
    if strict:
        report.strict = {"c5": cond5_strict(inst, seed=seed, _cache=c), "c6": cond6_strict(inst, c)}
    log.debug("verdicts %s", report.verdicts)
    return report


__all__ = [
    "DD_DIM_CAP",
    "GramInstance",
    "ConditionResult",
    "ConditionReport",
    "HypothesisError",
    "LemmaReport",
    "MARGINAL",
    "NOT_EVALUATED",
    "check_hypothesis",
    "classify",
    "cond1_pinv_nonneg",
    "cond2_dualcone_inclusion",
    "cond3_D_acute",
    "cond4_Cstar_acute",
    "cond5_projected_monotone",
    "cond5_strict",
    "cond6_monotone",
    "cond6_strict",
    "equivalence_report",
    "lemma_checks",
]
