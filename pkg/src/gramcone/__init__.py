"""Moore-Penrose inverses, polyhedral cone calculus and numerical checks of
when ``(T*T)+`` is nonnegative with respect to a cone."""

from .cone import ConvexCone, contains, double_description, dual, image_cone, is_acute
from .numlin import TolerancePolicy, nnls, numeric_rank, pinv, projector_range, projector_rowspace, svd
from .operators import (
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
from .theorem import GramInstance, check_hypothesis, equivalence_report, lemma_checks

__version__ = "0.1.0"
