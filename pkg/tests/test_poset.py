import random

import pytest

from finspace.poset import (
    FinitePoset,
    PosetError,
    core_reduction,
    enumerate_chains,
    minimal_open,
    product_poset,
    quotient_by_covering,
)
from oracles import leq_matrix, opens_of, random_poset_relations, strict_chains

CHAIN2 = FinitePoset.from_relations(["p", "g"], [("p", "g")])
WEDGE = FinitePoset.from_relations(["p", "q", "g"], [("p", "g"), ("q", "g")])
VEE = FinitePoset.from_relations(["m", "a", "b"], [("m", "a"), ("m", "b")])
S1 = FinitePoset.from_relations("abcd", [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])
POINT = FinitePoset.from_relations(["pt"], [])


def test_minimal_opens():
    assert minimal_open(CHAIN2, "p").members == ["g", "p"]
    assert minimal_open(WEDGE, "g").members == ["g"]
    with pytest.raises(PosetError):
        minimal_open(WEDGE, "zz")


def test_chains_of_wedge_and_circle():
    assert enumerate_chains(WEDGE, WEDGE.full, 1) == [("p", "g"), ("q", "g")]
    assert enumerate_chains(WEDGE, WEDGE.full, 2) == []
    assert enumerate_chains(S1, S1.full, 1) == [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]
    assert WEDGE.dimension() == 1 and S1.dimension() == 1
    assert WEDGE.dimension(0) == -1


def test_preorder_is_quotiented_to_least_label():
    P = FinitePoset.from_relations(["b", "a", "c"], [("a", "b"), ("b", "a"), ("b", "c")])
    assert P.points == ("a", "c")
    assert P.classes == {"a": "a", "b": "a", "c": "c"}
    assert P.leq(P.idx("b"), P.idx("c"))


def test_bad_relations_are_rejected():
    with pytest.raises(PosetError):
        FinitePoset.from_relations(["a"], [("a", "b")])
    with pytest.raises(PosetError):
        FinitePoset.from_relations(["a", "b"], [("a", "b", "c")])


def test_products():
    prod, labels = product_poset(POINT, S1)
    assert len(prod) == 4 and prod.relabel({k: labels[k][1] for k in prod.points}) == S1
    square, _ = product_poset(CHAIN2, CHAIN2)
    assert len(square) == 4 and square.points[square.minimum(square.full)] == "(p,p)"
    nine, _ = product_poset(WEDGE, WEDGE)
    minimal = [i for i in range(9) if nine.down[i] == 1 << i]
    maximal = [i for i in range(9) if nine.up[i] == 1 << i]
    assert len(nine) == 9
    assert len(minimal) == 4
    assert [nine.points[i] for i in maximal] == ["(g,g)"]


def test_covering_quotients():
    X, rep = quotient_by_covering(["1", "2", "3"], [["1", "2"], ["2", "3"]])
    assert X.points == ("1", "2", "3")
    assert X.leq(X.idx("1"), X.idx("2")) and X.leq(X.idx("3"), X.idx("2"))
    assert not X.leq(X.idx("1"), X.idx("3"))
    one, _ = quotient_by_covering(["1", "2", "3"], [["1", "2", "3"]])
    assert len(one) == 1
    same, rep = quotient_by_covering(S1, [S1.members(S1.up[i]) for i in range(4)])
    assert same == S1 and rep == {p: p for p in S1.points}
    with pytest.raises(PosetError):
        quotient_by_covering(["1", "2", "3"], [["1"], ["2"]])
    with pytest.raises(PosetError):
        quotient_by_covering(S1, [["a"]])


def test_cores():
    assert core_reduction(VEE).poset.points == ("m",)
    assert core_reduction(S1).poset == S1
    assert core_reduction(POINT).poset == POINT
    assert core_reduction(S1).profile == (4, (2, 2, 2, 2))


@pytest.mark.parametrize("seed", range(60))
def test_random_posets_against_brute_force(seed):
    rng = random.Random(seed)
    points, relations = random_poset_relations(rng, rng.randint(1, 6))
    P = FinitePoset.from_relations(points, relations)
    closure = leq_matrix(points, relations)
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            assert P.leq(P.idx(a), P.idx(b)) == closure[i][j]
            # p <= q iff U_q ⊆ U_p
            ia, ib = P.idx(a), P.idx(b)
            assert P.leq(ia, ib) == (P.up[ib] & ~P.up[ia] == 0)
    # chains against a permutation search
    for mask in opens_of(P):
        brute = sorted(strict_chains(P, mask))
        mine = sorted(c for level in P.all_chains(mask) for c in level)
        assert mine == brute
        assert P.dimension(mask) == max((len(c) for c in brute), default=0) - 1
    # a random covering: T0 output, monotone projection, preimage of U_[s] is U^s
    opens = [m for m in opens_of(P) if m]
    cover = rng.sample(opens, min(len(opens), rng.randint(1, 4)))
    cover.append(P.full)
    X, rep = quotient_by_covering(P, [P.members(m) for m in cover])
    assert len(set(X.up)) == len(X)
    for s in range(len(P)):
        star = P.full
        for m in cover:
            if m >> s & 1:
                star &= m
        pre = 0
        target = X.up[X.idx(rep[P.points[s]])]
        for t in range(len(P)):
            if target >> X.idx(rep[P.points[t]]) & 1:
                pre |= 1 << t
        assert pre == star
        for t in range(len(P)):
            if P.leq(s, t):
                assert X.leq(X.idx(rep[P.points[s]]), X.idx(rep[P.points[t]]))
