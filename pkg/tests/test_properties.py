"""Randomized invariants over a few hundred small spaces."""

import itertools
import json
import random

import pytest

from finspace.cohomology import higher_direct_image, sheaf_cohomology, standard_complex
from finspace.poset import bits
from finspace.predicates import (
    fibered_product,
    is_affine_morphism,
    is_schematic,
    is_schematic_morphism,
    stein_factorization,
)
from finspace.sheaves import (
    FracLine,
    FracMonoSheaf,
    StructureSheaf,
    UnrepresentableError,
    UnsupportedError,
    check_fracmono,
    is_quasi_coherent,
    line_equal,
    pullback,
    pushforward,
)
from finspace.space import InputError, MorphismDescriptor
from finspace.window import agrees_with_exact

from oracles import (
    line_refinement_pairs,
    opens_of,
    random_fracmono,
    random_rational_space,
    random_topological_space,
)

SPACES = 200


def space_batch(seed, count=SPACES, max_points=6, topological_share=0.25):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        if rng.random() < topological_share:
            out.append(random_topological_space(rng, max_points))
        else:
            out.append(random_rational_space(rng, max_points))
    return out


@pytest.fixture(scope="module")
def spaces():
    return space_batch(2024)


def matmul_int(a, b):
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


# ---------------------------------------------------------------------------
# cohomology


def test_minimal_opens_are_acyclic(spaces):
    for space in spaces:
        for p in range(len(space)):
            assert sheaf_cohomology(space, space.poset.up[p]).acyclic, (space.to_json(), p)


def test_cohomology_vanishes_above_dimension(spaces):
    for space in spaces:
        for u in opens_of(space.poset):
            if not u:
                continue
            report = sheaf_cohomology(space, u)
            dim = space.poset.dimension(u)
            assert all(report.is_zero(i) for i in range(dim + 1, dim + 3))


def test_differential_squares_to_zero(spaces):
    for space in spaces:
        cx = standard_complex(space, None, StructureSheaf())
        for n in range(len(cx.incidence) - 1):
            dd = matmul_int(cx.incidence[n + 1], cx.incidence[n])
            assert not any(any(row) for row in dd)


def test_window_agrees_with_exact(spaces):
    rng = random.Random(5)
    checked = 0
    for space in spaces:
        if not space.is_rational:
            continue
        window = 6 + checked % 3
        assert agrees_with_exact(sheaf_cohomology(space), sheaf_cohomology(space, mode="window", window=window))
        sheaf = random_fracmono(rng, space, qc=False, tries=20) if checked % 3 == 0 else None
        if sheaf is not None:
            exact = sheaf_cohomology(space, None, sheaf)
            assert agrees_with_exact(exact, sheaf_cohomology(space, None, sheaf, mode="window", window=window))
        checked += 1
    assert checked > 100


# ---------------------------------------------------------------------------
# predicates


def test_edge_and_paranoid_modes_agree(spaces):
    rng = random.Random(6)
    for space in spaces:
        assert is_schematic(space).verdict == is_schematic(space, paranoid=True).verdict, space.to_json()
        if space.is_rational:
            sheaf = random_fracmono(rng, space, qc=False, tries=20)
            if sheaf is not None:
                assert is_quasi_coherent(space, sheaf).verdict == is_quasi_coherent(space, sheaf, paranoid=True).verdict


def test_open_inclusions_extend_quasi_coherently(spaces):
    checked = 0
    for space in spaces:
        if not space.is_rational or not is_schematic(space).verdict:
            continue
        for u in opens_of(space.poset):
            if not u or u == space.poset.full:
                continue
            j = MorphismDescriptor(space.subspace(u), space, tuple(bits(u)))
            for i in range(space.poset.dimension(u) + 1):
                assert higher_direct_image(j, None, i).quasi_coherent, (space.to_json(), u, i)
            checked += 1
    assert checked > 200


def random_map(rng, src, tgt):
    """A random valid morphism found by rejection, or None."""
    for _ in range(200):
        images = tuple(rng.randrange(len(tgt)) for _ in range(len(src)))
        try:
            return MorphismDescriptor(src, tgt, images)
        except InputError:
            continue
    return None


def test_stein_factorization_of_schematic_morphisms():
    rng = random.Random(7)
    checked = 0
    while checked < 50:
        src, tgt = random_rational_space(rng, 5), random_rational_space(rng, 3)
        f = random_map(rng, src, tgt)
        if f is None or not is_schematic_morphism(f).verdict:
            continue
        try:
            st = stein_factorization(f)
        except UnrepresentableError:
            continue
        assert st.stein.compose(st.affine).mapping == f.mapping
        assert is_affine_morphism(st.affine).verdict
        (line,) = pushforward(st.stein, StructureSheaf()).summands
        assert all(line_equal((a, s), (0, t), src.universe) for a, s, t in zip(line.exps, line.poles, st.middle.poles))
        checked += 1


def test_direct_images_detect_schematic_morphisms():
    """On a schematic source, f is schematic iff every R^i f_* keeps the module library qc."""
    rng = random.Random(3)
    seen = {True: 0, False: 0}
    while seen[True] < 100 or seen[False] < 15:
        src, tgt = random_rational_space(rng, 4), random_rational_space(rng, 3)
        if not is_schematic(src).verdict:
            continue
        f = random_map(rng, src, tgt)
        if f is None:
            continue
        library = [None] + [m for m in (random_fracmono(rng, src) for _ in range(4)) if m is not None]
        try:
            preserved = all(
                higher_direct_image(f, m, i).quasi_coherent for m in library for i in range(src.dimension + 1)
            )
        except (UnrepresentableError, UnsupportedError):
            continue
        schematic = bool(is_schematic_morphism(f).verdict)
        assert preserved == schematic, (src.to_json(), tgt.to_json(), f.as_dict())
        seen[schematic] += 1


# ---------------------------------------------------------------------------
# fibered products


def point_maps(src, tgt):
    """Every valid morphism by exhaustive search over point maps."""
    leq_src = [[src.poset.leq(a, b) for b in range(len(src))] for a in range(len(src))]
    for images in itertools.product(range(len(tgt)), repeat=len(src)):
        if any(leq_src[a][b] and not tgt.poset.leq(images[a], images[b]) for a in range(len(src)) for b in range(len(src))):
            continue
        if src.is_rational and not all(tgt.poles[images[x]].issubset(src.poles[x]) for x in range(len(src))):
            continue
        yield images


def test_fibered_product_represents_pairs():
    rng = random.Random(8)
    checked = 0
    while checked < 40:
        if rng.random() < 0.5:
            x, y, s, t = (random_topological_space(rng, 3) for _ in range(4))
        else:
            x, y, t = (random_rational_space(rng, 3) for _ in range(3))
            s = random_rational_space(rng, 2)
        f, g = random_map(rng, x, s), random_map(rng, y, s)
        if f is None or g is None or t.universe != x.universe:
            continue
        try:
            prod = fibered_product(f, g)
        except (UnrepresentableError, InputError):
            continue
        if len(prod.space) > 4:
            continue
        pairs = {
            (u, v)
            for u in point_maps(t, x)
            for v in point_maps(t, y)
            if all(f.mapping[a] == g.mapping[b] for a, b in zip(u, v))
        }
        induced = [
            (tuple(prod.first.mapping[z] for z in h), tuple(prod.second.mapping[z] for z in h))
            for h in point_maps(t, prod.space)
        ]
        assert len(set(induced)) == len(induced)
        assert set(induced) == pairs
        checked += 1


# ---------------------------------------------------------------------------
# weak equivalences


def twist_library(space):
    """Fractional lines on ``space`` with exponents in ``-3..3``."""
    out = []
    for exps in itertools.product(range(-3, 4), repeat=len(space)):
        if len(set(exps)) > 2:
            continue
        sheaf = FracMonoSheaf((FracLine(exps, tuple(space.poles)),))
        try:
            check_fracmono(space, sheaf)
        except InputError:
            continue
        if is_quasi_coherent(space, sheaf).verdict:
            out.append(sheaf)
    return out


def same_sheaf(a, b, space):
    (la,), (lb,) = a.summands, b.summands
    return all(
        line_equal((la.exps[t], la.poles[t]), (lb.exps[t], lb.poles[t]), space.universe) for t in range(len(space))
    )


@pytest.fixture(scope="module")
def refinements():
    libraries = {}

    def library(space):
        key = json.dumps(space.to_json(), sort_keys=True)
        if key not in libraries:
            libraries[key] = twist_library(space)
        return libraries[key]

    return [(f, library(f.source), library(f.target)) for _, _, f in line_refinement_pairs()]


def test_weak_equivalences_push_pulled_lines_back(refinements):
    checked = 0
    for f, _, lib in refinements:
        for sheaf in lib:
            try:
                pulled = pullback(f, sheaf)
            except UnrepresentableError:
                # the pulled-back stalk leaves the fractional-line family
                continue
            assert same_sheaf(pushforward(f, pulled), sheaf, f.target)
            checked += 1
    assert checked > 200


def test_weak_equivalences_pull_pushed_lines_back(refinements):
    checked = 0
    for f, lib, _ in refinements:
        for sheaf in lib:
            pushed = pushforward(f, sheaf)
            try:
                back = pullback(f, pushed)
            except UnrepresentableError:
                continue
            assert same_sheaf(back, sheaf, f.source)
            checked += 1
    assert checked > 200
