import json
import random

import pytest

from finspace import fixtures
from finspace.linalg import ZZ
from finspace.poset import bits
from finspace.predicates import all_morphisms, is_schematic
from finspace.rational import ALL, PoleSet
from finspace.sheaves import (
    AbelianSheaf,
    FracLine,
    FracMonoSheaf,
    StructureSheaf,
    UnrepresentableError,
    constant_sheaf,
    is_quasi_coherent,
    line_equal,
    pullback,
    pushforward,
    sections_line,
    sheaf_from_json,
    structure_as_fracmono,
    tilde,
)
from finspace.space import (
    InputError,
    MorphismDescriptor,
    identity_morphism,
    load_space,
    morphism_to_point,
    rational_space,
    space_from_json,
    topological_space,
)

from oracles import fracmono_edge_is_iso, random_fracmono, random_rational_space, sample_elements


def lines_agree(space, a: FracMonoSheaf, b: FracMonoSheaf) -> bool:
    u = space.universe
    if len(a.summands) != len(b.summands):
        return False
    for la, lb in zip(a.summands, b.summands):
        for t in range(len(space)):
            if not line_equal((la.exps[t], la.poles[t]), (lb.exps[t], lb.poles[t]), u):
                return False
    return True


def abelian_equal(space, a: AbelianSheaf, b: AbelianSheaf) -> bool:
    if a.gens != b.gens or a.relations != b.relations:
        return False
    return all(a.restrictions[e] == b.restrictions[e] for e in space.poset.hasse)


# ---------------------------------------------------------------------------
# validation


def test_doubled_line_is_valid():
    dl = fixtures.doubled_line()
    assert dl.points == ("g", "p", "q")
    assert dl.pole("g").is_all
    assert dl.pole("p") == PoleSet(frozenset({"inf"}))


def test_non_monotone_poles_rejected():
    with pytest.raises(InputError) as err:
        rational_space(["p", "g"], [("p", "g")], {"p": ["zero"], "g": ["inf"]})
    assert "p" in str(err.value) and "g" in str(err.value)


def test_topological_space_is_valid():
    s1 = fixtures.circle()
    assert not s1.is_rational
    assert s1.ring == ZZ
    assert is_quasi_coherent(s1, StructureSheaf()).verdict


def test_unknown_place_rejected():
    with pytest.raises(InputError, match="two"):
        rational_space(["p"], [], {"p": ["two"]})


def test_malformed_json_rejected(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError, match="bad.json"):
        load_space(bad)


def test_cyclic_relations_collapse_to_quotient():
    space = topological_space(["a", "b", "c"], [("a", "b"), ("b", "a"), ("a", "c")])
    assert space.points == ("a", "c")


def test_json_round_trip():
    for build in fixtures.NAMED.values():
        space = build()
        again = space_from_json(json.loads(json.dumps(space.to_json())))
        assert again == space


def test_morphism_requires_monotone_map_and_pole_inclusion():
    dl = fixtures.doubled_line()
    p1 = fixtures.projective_line()
    wedge = fixtures.wedge()
    g, pt = wedge.poset.idx("g"), wedge.poset.idx("p")
    with pytest.raises(InputError, match="monotone"):
        MorphismDescriptor(wedge, wedge, tuple(pt if i == g else g for i in range(3)))
    # q has poles {inf} but its image in P1 has {zero}
    with pytest.raises(InputError):
        MorphismDescriptor(dl, p1, tuple(p1.poset.idx(x) for x in ("g", "p", "q")))


# ---------------------------------------------------------------------------
# quasi-coherence


def test_circle_constant_is_qc():
    s1 = fixtures.circle()
    assert is_quasi_coherent(s1, constant_sheaf(s1)).verdict


def test_circle_with_doubling_restriction():
    s1 = fixtures.circle()
    doc = {"kind": "abelian", "ring": "Z", "stalks": {p: {"gens": 1} for p in s1.points},
           "restrictions": [{"from": "a", "to": "c", "matrix": [[2]]}]}
    sheaf = sheaf_from_json(s1, doc)
    qc = is_quasi_coherent(s1, sheaf)
    assert not qc.verdict and qc.failures == ("a<c",)
    # multiplication by 2 on Z is not surjective either
    assert not is_quasi_coherent(s1, sheaf, "finite_type").verdict


def test_circle_with_unit_restriction_is_qc():
    s1 = fixtures.circle()
    doc = {"kind": "abelian", "ring": "Z", "stalks": {p: {"gens": 1} for p in s1.points},
           "restrictions": [{"from": "a", "to": "c", "matrix": [[-1]]}]}
    assert is_quasi_coherent(s1, sheaf_from_json(s1, doc)).verdict


def test_surjective_but_not_injective_is_finite_type_only():
    chain = topological_space(["a", "b"], [("a", "b")])
    doc = {"kind": "abelian", "ring": "Z", "stalks": {"a": {"gens": 2}, "b": {"gens": 1}},
           "restrictions": [{"from": "a", "to": "b", "matrix": [[1, 0]]}]}
    sheaf = sheaf_from_json(chain, doc)
    assert not is_quasi_coherent(chain, sheaf).verdict
    assert is_quasi_coherent(chain, sheaf, "finite_type").verdict


@pytest.mark.parametrize("n", range(-4, 5))
def test_projective_line_twists_are_qc(n):
    p1 = fixtures.projective_line()
    exps = [0] * 3
    exps[p1.poset.idx("q")] = n
    line = FracLine(tuple(exps), tuple(p1.poles))
    sheaf = FracMonoSheaf((line,))
    assert is_quasi_coherent(p1, sheaf).verdict
    samples = sample_elements(p1.universe)
    assert all(fracmono_edge_is_iso(p1, line, a, b, samples) for a, b in p1.poset.strict_pairs)


def test_fracmono_shift_without_unit_is_not_qc():
    space = rational_space(["p", "g"], [("p", "g")], {"p": ["inf"], "g": ["inf"]})
    line = FracLine((1, 0), tuple(space.poles))
    assert not is_quasi_coherent(space, FracMonoSheaf((line,))).verdict
    assert not fracmono_edge_is_iso(space, line, 0, 1, sample_elements(space.universe))


def test_fracmono_qc_agrees_with_membership_oracle():
    rng = random.Random(11)
    checked = 0
    while checked < 150:
        space = random_rational_space(rng, 5)
        sheaf = random_fracmono(rng, space, qc=False)
        if sheaf is None:
            continue
        samples = sample_elements(space.universe)
        line = sheaf.summands[0]
        expected = all(fracmono_edge_is_iso(space, line, a, b, samples) for a, b in space.poset.hasse)
        assert is_quasi_coherent(space, sheaf).verdict == expected, space.to_json()
        assert is_quasi_coherent(space, sheaf, paranoid=True).verdict == expected
        checked += 1


def test_fracmono_outside_family_rejected():
    p1 = fixtures.projective_line()
    doc = {"kind": "fracmono", "data": {"p": {"exp": 0, "poles": ["inf"]}, "q": {"exp": 0, "poles": ["zero"]},
                                        "g": {"exp": 2, "poles": ["zero", "inf", "one"]}}}
    with pytest.raises(InputError, match="family"):
        sheaf_from_json(p1, doc)


def test_fracmono_must_include_along_edges():
    chain = fixtures.chain2()
    doc = {"kind": "fracmono", "data": {"p": {"exp": -1, "poles": ["inf"]}, "g": {"exp": 3, "poles": ["inf", "zero"]}}}
    assert sheaf_from_json(chain, doc)
    bad = fixtures.chain3()
    doc = {"kind": "fracmono", "data": {"p": {"exp": -1, "poles": ["inf"]}, "m": {"exp": 0, "poles": ["inf"]},
                                        "g": {"exp": 0, "poles": ["inf", "zero"]}}}
    with pytest.raises(InputError, match="p<m"):
        sheaf_from_json(bad, doc)


def test_non_commuting_restrictions_rejected():
    diamond = topological_space(["a", "b", "c", "d"], [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])
    doc = {"kind": "abelian", "ring": "Z", "stalks": {p: {"gens": 1} for p in diamond.points},
           "restrictions": [{"from": "a", "to": "b", "matrix": [[2]]}]}
    with pytest.raises(InputError, match="commute"):
        sheaf_from_json(diamond, doc)


# ---------------------------------------------------------------------------
# pullback and tilde


def test_tilde_of_global_ring_is_structure_sheaf():
    dl = fixtures.doubled_line()
    f = morphism_to_point(dl, PoleSet(frozenset({"inf"})))
    pulled = pullback(f, FracMonoSheaf((FracLine((0,), (PoleSet(frozenset({"inf"})),)),)))
    assert lines_agree(dl, pulled, structure_as_fracmono(dl))
    assert lines_agree(dl, tilde(dl, (0, PoleSet(frozenset({"inf"})))), structure_as_fracmono(dl))


def test_pullback_along_identity():
    p1 = fixtures.projective_line()
    twist = FracMonoSheaf((FracLine((0, 0, 3), tuple(p1.poles)),))
    assert lines_agree(p1, pullback(identity_morphism(p1), twist), twist)
    s1 = fixtures.circle()
    doc = {"kind": "abelian", "ring": "Z", "stalks": {p: {"gens": 1} for p in s1.points},
           "restrictions": [{"from": "a", "to": "c", "matrix": [[2]]}]}
    sheaf = sheaf_from_json(s1, doc)
    assert abelian_equal(s1, pullback(identity_morphism(s1), sheaf), sheaf)


def test_tilde_of_torsion_module_on_circle():
    s1 = fixtures.circle()
    sheaf = tilde(s1, (1, [[3]]))
    assert abelian_equal(s1, sheaf, constant_sheaf(s1, 1, [[3]]))
    assert is_quasi_coherent(s1, sheaf).verdict


def test_pullback_preserves_qc():
    rng = random.Random(5)
    done = 0
    while done < 60:
        src = random_rational_space(rng, 4)
        tgt = random_rational_space(rng, 3)
        maps = list(all_morphisms(src, tgt))
        sheaf = random_fracmono(rng, tgt)
        if not maps or sheaf is None:
            continue
        f = rng.choice(maps)
        try:
            pulled = pullback(f, sheaf)
        except UnrepresentableError:
            continue
        assert is_quasi_coherent(src, pulled).verdict
        done += 1


# ---------------------------------------------------------------------------
# pushforward


def test_pushforward_to_point_gives_global_sections():
    dl = fixtures.doubled_line()
    pushed = pushforward(morphism_to_point(dl, PoleSet(frozenset({"inf"}))), StructureSheaf())
    (line,) = pushed.summands
    assert line.exps == (0,)
    assert line.poles == (PoleSet(frozenset({"inf"})),)


def test_pushforward_from_generic_point():
    dl = fixtures.doubled_line()
    g = dl.subspace(1 << dl.poset.idx("g"))
    j = MorphismDescriptor(g, dl, (dl.poset.idx("g"),))
    pushed = pushforward(j, StructureSheaf())
    (line,) = pushed.summands
    assert line.poles == (ALL, ALL, ALL)
    assert is_quasi_coherent(dl, pushed).verdict


def test_pushforward_along_identity():
    p1 = fixtures.projective_line()
    twist = FracMonoSheaf((FracLine((0, 0, -2), tuple(p1.poles)),))
    assert lines_agree(p1, pushforward(identity_morphism(p1), twist), twist)
    s1 = fixtures.circle()
    pushed = pushforward(identity_morphism(s1), constant_sheaf(s1))
    assert pushed.gens == (1, 1, 1, 1)


def test_pushforward_with_disconnected_fiber_is_unrepresentable():
    dl = fixtures.doubled_line()
    closed = dl.subspace(dl.poset.mask_of(["p", "q"]))
    f = morphism_to_point(closed, PoleSet(frozenset({"inf"})))
    with pytest.raises(UnrepresentableError):
        pushforward(f, StructureSheaf())


def test_abelian_pushforward_to_point_is_h0():
    s1 = fixtures.circle()
    pushed = pushforward(morphism_to_point(s1), constant_sheaf(s1))
    assert pushed.gens == (1,)


def test_open_inclusions_preserve_qc():
    named = [fixtures.doubled_line(), fixtures.projective_line(), fixtures.chain2()]
    rng = random.Random(8)
    while len(named) < 40:
        space = random_rational_space(rng, 5)
        if is_schematic(space).verdict:
            named.append(space)
    for space in named:
        for p in range(len(space)):
            u = space.poset.up[p]
            sub = space.subspace(u)
            j = MorphismDescriptor(sub, space, tuple(bits(u)))
            try:
                pushed = pushforward(j, StructureSheaf())
            except UnrepresentableError:
                continue
            assert is_quasi_coherent(space, pushed).verdict, (space.to_json(), space.points[p])


# ---------------------------------------------------------------------------
# sections over spaces with a minimum


def test_sections_and_tilde_are_inverse_on_spaces_with_minimum():
    rng = random.Random(21)
    done = 0
    while done < 80:
        space = random_rational_space(rng, 5)
        if space.poset.minimum(space.poset.full) is None:
            continue
        sheaf = random_fracmono(rng, space)
        if sheaf is None:
            continue
        (line,) = sheaf.summands
        low = space.poset.minimum(space.poset.full)
        sections = sections_line(space, line, space.poset.full)
        assert line_equal(sections, (line.exps[low], line.poles[low]), space.universe)
        assert lines_agree(space, tilde(space, sections), sheaf)
        done += 1
