"""Small named spaces used throughout the tests, the docs and the CLI goldens."""

from __future__ import annotations

from .space import RingedFiniteSpace, rational_space, topological_space

WEDGE_RELATIONS = [("p", "g"), ("q", "g")]


def chain2() -> RingedFiniteSpace:
    return rational_space(["p", "g"], [("p", "g")], {"p": ["inf"], "g": ["zero", "inf"]})


def doubled_line() -> RingedFiniteSpace:
    return rational_space(["p", "q", "g"], WEDGE_RELATIONS, {"p": ["inf"], "q": ["inf"], "g": "ALL"})


def projective_line() -> RingedFiniteSpace:
    return rational_space(["p", "q", "g"], WEDGE_RELATIONS, {"p": ["inf"], "q": ["zero"], "g": ["zero", "inf"]})


def wedge() -> RingedFiniteSpace:
    return topological_space(["p", "q", "g"], WEDGE_RELATIONS)


def vee() -> RingedFiniteSpace:
    return topological_space(["m", "a", "b"], [("m", "a"), ("m", "b")])


def circle() -> RingedFiniteSpace:
    """Four-point model of the circle: two closed points below two open points."""
    return topological_space(["a", "b", "c", "d"], [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])


def chain3() -> RingedFiniteSpace:
    """Refined model of ``chain2`` (see ``scheme.refinement_morphism``)."""
    return rational_space(
        ["p", "m", "g"], [("p", "m"), ("m", "g")], {"p": ["inf"], "m": ["inf"], "g": ["zero", "inf"]}
    )


NAMED = {
    "chain2": chain2,
    "chain3": chain3,
    "dl": doubled_line,
    "p1": projective_line,
    "wedge": wedge,
    "vee": vee,
    "s1": circle,
}
