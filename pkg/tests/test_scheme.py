import json
import random
from pathlib import Path

import pytest

from finspace import fixtures
from finspace.predicates import is_affine, is_affine_morphism
from finspace.rational import ALL, PoleSet, default_universe
from finspace.scheme import (
    NOT_MONO,
    NOT_OPEN,
    OPEN,
    classify_gluing,
    covering_model,
    has_open_restrictions,
    is_thinner,
    line_model,
    line_refinement,
    refinement_equivalence,
    refinement_morphism,
    spec_export,
)
from finspace.sheaves import UnrepresentableError
from finspace.space import InputError, identity_morphism, load_morphism, point_space, rational_space

from oracles import line_refinement_pairs, random_rational_space, sections_poles

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def poles(*names):
    return PoleSet(frozenset(names))


def test_gluing_classes():
    assert classify_gluing(poles("inf"), poles("inf")) == (OPEN, PoleSet())
    assert classify_gluing(poles("inf"), poles("inf", "zero")) == (OPEN, poles("zero"))
    assert classify_gluing(poles("inf"), ALL) == (NOT_OPEN, ALL)
    assert classify_gluing(ALL, ALL) == (OPEN, PoleSet())
    assert classify_gluing(PoleSet(), poles("one")) == (NOT_MONO, poles("one"))
    assert classify_gluing(PoleSet(), PoleSet()) == (OPEN, PoleSet())


def test_open_restrictions_on_fixtures():
    assert has_open_restrictions(fixtures.projective_line()).verdict
    assert has_open_restrictions(fixtures.chain2()).verdict
    dl = has_open_restrictions(fixtures.doubled_line())
    assert dl.verdict is False
    assert dl.counterexample.evidence["class"] == NOT_OPEN
    assert dl.counterexample.label == "edge p<g: flat-mono-not-open"
    assert has_open_restrictions(point_space(default_universe(), ALL)).verdict


def test_open_restrictions_need_rational_universe():
    with pytest.raises(InputError):
        has_open_restrictions(fixtures.wedge())


def test_chain_export_collapses_to_polynomial_ring():
    doc = spec_export(fixtures.chain2()).to_json()
    assert [c["ring"]["name"] for c in doc["charts"]] == ["k[x,1/x]", "k[x]"]
    assert doc["gluings"] == [{"from": "g", "to": "p", "class": OPEN, "removed": ["zero"]}]
    assert doc["is_scheme"] is True
    assert doc["affine_collapse"]["ring"]["name"] == "k[x]"


def test_projective_line_export():
    desc = spec_export(fixtures.projective_line())
    doc = desc.to_json()
    assert doc["kind"] == "scheme"
    assert {c["point"]: c["ring"]["name"] for c in doc["charts"]} == {"g": "k[x,1/x]", "p": "k[x]", "q": "k[1/x]"}
    assert doc["global_sections"]["name"] == "k"
    assert doc["affine_collapse"] is None
    assert "global sections: k" in desc.pretty()


def test_doubled_line_is_not_a_scheme():
    doc = spec_export(fixtures.doubled_line()).to_json()
    assert doc["is_scheme"] is False
    assert doc["kind"] == "locally ringed space"
    assert {g["class"] for g in doc["gluings"]} == {NOT_OPEN}
    assert doc["global_sections"]["name"] == "k[x]"


def test_export_is_deterministic():
    a = json.dumps(spec_export(fixtures.projective_line()).to_json())
    b = json.dumps(spec_export(fixtures.projective_line()).to_json())
    assert a == b


def test_export_invariants_on_random_spaces():
    rng = random.Random(70)
    for _ in range(200):
        space = random_rational_space(rng, 6)
        desc = spec_export(space)
        assert sorted(desc.global_sections, key=lambda p: (p.is_all, sorted(p.places))) == sections_poles(space, space.poset.full)
        assert desc.affine == (is_affine(space).verdict is True)
        doc = desc.to_json()
        assert (doc["affine_collapse"] is not None) == desc.affine
        opens = has_open_restrictions(space)
        hasse = {(space.points[b], space.points[a]) for a, b in space.poset.hasse}
        kinds = {(g.source, g.target): g.kind for g in desc.gluings}
        if opens.verdict:
            assert all(k == OPEN for k in kinds.values())
        else:
            assert opens.counterexample.evidence["class"] in (NOT_OPEN, NOT_MONO)
            assert any(kinds[e] != OPEN for e in hasse)


def test_export_needs_rational_universe():
    with pytest.raises(InputError):
        spec_export(fixtures.circle())


# ---------------------------------------------------------------------------
# covering models


def test_projective_line_cover_model():
    p1 = fixtures.projective_line()
    doc = json.loads((FIXTURES / "p1_cover.json").read_text())
    model = covering_model(p1, doc["cover"])
    assert model.space == p1
    coarse = covering_model(p1, doc["coarser"])
    assert coarse.space == p1


def test_cover_collapsing_chain():
    chain3 = fixtures.chain3()
    model = covering_model(chain3, [["p", "m", "g"], ["g"]])
    # quotient classes are labeled by their least member
    assert model.space.points == ("g", "m")
    assert model.space.poles == (poles("zero", "inf"), poles("inf"))
    assert model.projection.as_dict() == {"g": "g", "m": "m", "p": "m"}


def test_cover_with_disconnected_star_is_unrepresentable():
    dl = fixtures.doubled_line()
    closed = rational_space(["a", "b"], [], {"a": ["inf"], "b": ["inf"]})
    with pytest.raises(UnrepresentableError):
        covering_model(closed, [["a", "b"]])
    assert covering_model(dl, [["p", "q", "g"]]).space.poles == (poles("inf"),)


def test_cover_members_must_be_open():
    with pytest.raises(InputError, match="not open"):
        covering_model(fixtures.chain2(), [["p"]])
    with pytest.raises(InputError):
        covering_model(fixtures.chain2(), [])


def test_refinement_morphism_direction():
    chain3 = fixtures.chain3()
    fine = [["p", "m", "g"], ["m", "g"], ["g"]]
    coarse = [["p", "m", "g"], ["g"]]
    assert is_thinner(chain3, fine, coarse)
    assert not is_thinner(chain3, coarse, fine)
    x_fine, x_coarse, f = refinement_morphism(chain3, fine, coarse)
    assert len(x_fine.space) == 3 and len(x_coarse.space) == 2
    assert is_affine_morphism(f, "weak_equivalence").verdict
    with pytest.raises(InputError, match="thinner"):
        refinement_morphism(chain3, coarse, fine)


def test_line_model_of_standard_cover():
    u = default_universe()
    model = line_model(u, [poles("inf"), poles("zero")])
    assert model.points == ("generic", "inf", "zero")
    assert model.poles == (poles("zero", "inf"), poles("zero"), poles("inf"))


def test_line_refinement_requires_same_open():
    u = default_universe()
    with pytest.raises(InputError, match="different"):
        line_refinement(u, [poles("inf")], [poles("zero")])


# ---------------------------------------------------------------------------
# refinement witnesses


def test_identity_witness():
    for build in (fixtures.chain2, fixtures.projective_line, fixtures.doubled_line):
        witness = refinement_equivalence(identity_morphism(build()))
        assert witness.to_json()["global_sections_agree"]
        assert all(p["affine_collapse"] and p["covers"] for p in witness.patches)


def test_chain_refinement_witness():
    f = load_morphism(FIXTURES / "chain3_to_chain2.json")
    witness = refinement_equivalence(f)
    by_point = {p["point"]: p for p in witness.patches}
    assert by_point["p"]["sections"]["name"] == "k[x]"
    assert [c["point"] for c in by_point["p"]["charts"]] == ["g", "m", "p"]


def test_witness_requires_weak_equivalence():
    f = load_morphism(FIXTURES / "generic_into_dl.json")
    with pytest.raises(InputError, match="weak equivalence"):
        refinement_equivalence(f)


def test_all_line_refinements_have_witnesses():
    count = 0
    for fine, coarse, f in line_refinement_pairs():
        witness = refinement_equivalence(f)
        assert witness.source.global_sections == witness.target.global_sections
        count += 1
    assert count >= 10
