"""Exact computations on ringed finite spaces."""

from .cohomology import CohomologyReport, base_change, higher_direct_image, sheaf_cohomology, standard_complex
from .poset import FinitePoset, core_reduction, minimal_open, product_poset, quotient_by_covering
from .predicates import (
    PredicateVerdict,
    fibered_product,
    is_affine,
    is_affine_morphism,
    is_schematic,
    is_schematic_morphism,
    is_semi_separated,
    stein_factorization,
)
from .rational import ALL, EMPTY, PoleSet, RationalElem, RationalUniverse, default_universe
from .scheme import covering_model, has_open_restrictions, refinement_equivalence, refinement_morphism, spec_export
from .sheaves import FracLine, FracMonoSheaf, PatternSheaf, StructureSheaf, is_quasi_coherent, pullback, pushforward, tensor
from .space import (
    InputError,
    MorphismDescriptor,
    RingedFiniteSpace,
    identity_morphism,
    load_morphism,
    load_space,
    morphism_to_point,
    space_from_json,
)

__all__ = [
    "ALL",
    "EMPTY",
    "CohomologyReport",
    "FinitePoset",
    "FracLine",
    "FracMonoSheaf",
    "InputError",
    "MorphismDescriptor",
    "PatternSheaf",
    "PoleSet",
    "PredicateVerdict",
    "RationalElem",
    "RationalUniverse",
    "RingedFiniteSpace",
    "StructureSheaf",
    "base_change",
    "core_reduction",
    "covering_model",
    "default_universe",
    "fibered_product",
    "has_open_restrictions",
    "higher_direct_image",
    "identity_morphism",
    "is_affine",
    "is_affine_morphism",
    "is_quasi_coherent",
    "is_schematic",
    "is_schematic_morphism",
    "is_semi_separated",
    "load_morphism",
    "load_space",
    "minimal_open",
    "morphism_to_point",
    "product_poset",
    "pullback",
    "pushforward",
    "quotient_by_covering",
    "refinement_equivalence",
    "refinement_morphism",
    "sheaf_cohomology",
    "space_from_json",
    "spec_export",
    "standard_complex",
    "stein_factorization",
    "tensor",
]
