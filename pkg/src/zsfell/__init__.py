"""Zappa-Szep products of finite groupoids and Fell bundles, with checkers."""

from __future__ import annotations

from .alg import Section, blend_rank, convolve, cstar_norm, hom_i, hom_j, i_norm, star_section
from .corpus import CorpusEntry, builtin, oracle_scan, random_instance
from .fell import (
    ConcreteMatrixBundle,
    Element,
    FellBundle,
    full_matrix_bundle,
    line_bundle,
    pullback_bundle,
    validate_fell_bundle,
)
from .gpd import (
    FiniteGroupoid,
    MatchedPair,
    SelfSimilarAction,
    check_matched_pair,
    internal_factorization,
    transformation_matched_pair,
    validate_groupoid,
    zs_groupoid,
)
from .rep import (
    CovariantRep,
    StrictRep,
    UnitMeasure,
    disintegrate,
    injectivity_check,
    integrate,
    regular_strict_rep,
    twisted_amplification,
    validate_covariant_rep,
)
from .report import StructuralError, ValidationReport
from .zsb import (
    CompatibleAction,
    UnitaryFamily,
    action_from_unitary_family,
    canonical_embeddings,
    theta_iso,
    validate_action,
    validate_unitary_family,
    zs_bundle,
)

__all__ = [
    "CompatibleAction",
    "ConcreteMatrixBundle",
    "CorpusEntry",
    "CovariantRep",
    "Element",
    "FellBundle",
    "FiniteGroupoid",
    "MatchedPair",
    "Section",
    "SelfSimilarAction",
    "StrictRep",
    "StructuralError",
    "UnitMeasure",
    "UnitaryFamily",
    "ValidationReport",
    "action_from_unitary_family",
    "blend_rank",
    "builtin",
    "canonical_embeddings",
    "check_matched_pair",
    "convolve",
    "cstar_norm",
    "disintegrate",
    "full_matrix_bundle",
    "hom_i",
    "hom_j",
    "i_norm",
    "injectivity_check",
    "integrate",
    "internal_factorization",
    "line_bundle",
    "oracle_scan",
    "pullback_bundle",
    "random_instance",
    "regular_strict_rep",
    "star_section",
    "theta_iso",
    "transformation_matched_pair",
    "twisted_amplification",
    "validate_action",
    "validate_covariant_rep",
    "validate_fell_bundle",
    "validate_groupoid",
    "validate_unitary_family",
    "zs_bundle",
    "zs_groupoid",
]

__version__ = "0.1.0"
