import random

import pytest
import sympy
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from finspace.linalg import (
    QQ,
    ZZ,
    PrimeField,
    complex_homology,
    identity,
    invariant_factors,
    kernel_basis,
    matmul,
    module_map_is_iso,
    module_map_is_surjective,
    rank,
    ring_from_name,
    smith_normal_form,
    solve_in_basis,
)
from oracles import _rank_mod


def random_matrix(rng, rows, cols, lo=-4, hi=4):
    return [[rng.randint(lo, hi) for _ in range(cols)] for _ in range(rows)]


def test_ring_names():
    assert ring_from_name("Z") is ZZ and ring_from_name("Q") is QQ
    assert ring_from_name("F7") == PrimeField(7) == ring_from_name("GF(7)")
    with pytest.raises(ValueError):
        ring_from_name("R")
    with pytest.raises(ValueError):
        PrimeField(6)


@pytest.mark.parametrize("seed", range(40))
def test_rank_and_smith_form_match_sympy(seed):
    rng = random.Random(seed)
    rows, cols = rng.randint(1, 6), rng.randint(1, 6)
    a = random_matrix(rng, rows, cols)
    if seed % 3 == 0:  # force a dependency
        a.append([x + y for x, y in zip(a[0], a[-1])])
    m = sympy.Matrix(a)
    assert rank(a, QQ) == m.rank()
    assert rank(a, PrimeField(5)) == _rank_mod(m, 5)
    form = smith_normal_form(a, ZZ)
    expected = [abs(int(v)) for v in sympy_snf(m, domain=sympy.ZZ).diagonal() if v != 0]
    assert [abs(v) for v in form.invariants] == expected
    assert matmul(matmul(form.left, a, ZZ), form.right, ZZ) == form.diagonal
    assert matmul(form.left, form.left_inverse, ZZ) == identity(len(a))


@pytest.mark.parametrize("seed", range(40))
def test_invariant_factors_match_sympy(seed):
    rng = random.Random(100 + seed)
    rows, cols = rng.randint(1, 8), rng.randint(1, 8)
    # sparse entries in {-1, 0, 1} with a few larger ones, like incidence matrices
    a = [[rng.choice([0, 0, 0, 1, -1, 2, 3, -6]) for _ in range(cols)] for _ in range(rows)]
    expected = [abs(int(v)) for v in sympy_snf(sympy.Matrix(a), domain=sympy.ZZ).diagonal() if v != 0]
    assert [abs(v) for v in invariant_factors(a, ZZ)] == expected
    assert len(invariant_factors(a, QQ)) == sympy.Matrix(a).rank()
    assert len(invariant_factors(a, PrimeField(3))) == _rank_mod(sympy.Matrix(a), 3)


@pytest.mark.parametrize("seed", range(20))
def test_kernel_and_solve(seed):
    rng = random.Random(100 + seed)
    rows, cols = rng.randint(1, 5), rng.randint(1, 6)
    a = random_matrix(rng, rows, cols)
    ker = kernel_basis(a, cols, ZZ)
    width = len(ker[0]) if ker and ker[0] else 0
    assert width == cols - sympy.Matrix(a).rank()
    if width:
        assert all(v == 0 for row in matmul(a, ker, ZZ) for v in row)
    # solving recovers integer coordinates of an integer combination
    basis = [[1, 0], [2, 3], [0, 1]]
    coords = [[rng.randint(-3, 3)], [rng.randint(-3, 3)]]
    target = matmul(basis, coords, ZZ)
    assert solve_in_basis(basis, target, 3, ZZ) == coords
    assert solve_in_basis([[2], [0]], [[1], [0]], 2, ZZ) is None


def test_module_maps_over_integers():
    assert module_map_is_iso([[1]], [[]], [[]], 1, 1, ZZ)
    assert not module_map_is_iso([[2]], [[]], [[]], 1, 1, ZZ)
    assert not module_map_is_surjective([[2]], [[]], 1, 1, ZZ)
    # Z/2 --3--> Z/2 is an isomorphism; Z/4 -> Z/2 is onto but not injective
    assert module_map_is_iso([[3]], [[2]], [[2]], 1, 1, ZZ)
    assert module_map_is_surjective([[1]], [[2]], 1, 1, ZZ)
    assert not module_map_is_iso([[1]], [[4]], [[2]], 1, 1, ZZ)
    # Z -> Z/2 is not injective
    assert not module_map_is_iso([[1]], [[]], [[2]], 1, 1, ZZ)
    # Z^2 / (0,1) -> Z via (1,0)
    assert module_map_is_iso([[1, 0]], [[0], [1]], [[]], 2, 1, ZZ)


@pytest.mark.parametrize("seed", range(30))
def test_module_maps_over_a_field_against_ranks(seed):
    rng = random.Random(200 + seed)
    ring = QQ
    n_src, n_dst = rng.randint(0, 3), rng.randint(1, 4)
    k = rng.randint(0, 2)
    phi = random_matrix(rng, n_dst, n_src, -2, 2) if n_src else [[] for _ in range(n_dst)]
    rel = random_matrix(rng, n_dst, k, -2, 2) if k else [[] for _ in range(n_dst)]
    joined = sympy.Matrix([list(p) + list(r) for p, r in zip(phi, rel)]) if n_src + k else sympy.zeros(n_dst, 0)
    r_join = joined.rank() if n_src + k else 0
    r_rel = sympy.Matrix(rel).rank() if k else 0
    onto = r_join == n_dst
    injective = r_join - r_rel == n_src
    assert module_map_is_surjective(phi, rel, n_src, n_dst, ring) == onto
    assert module_map_is_iso(phi, [[] for _ in range(n_src)], rel, n_src, n_dst, ring) == (onto and injective)


def test_complex_homology_of_a_circle_and_torsion():
    # boundary of a triangle, cochain direction: C^0 = Z^3 -> C^1 = Z^3
    d0 = [[-1, 1, 0], [0, -1, 1], [-1, 0, 1]]
    groups = complex_homology([d0], ZZ, [3, 3])
    assert [(g.rank, g.torsion) for g in groups] == [(1, ()), (1, ())]
    # Z --2--> Z has cokernel Z/2
    groups = complex_homology([[[2]]], ZZ, [1, 1])
    assert [(g.rank, g.torsion) for g in groups] == [(0, ()), (0, (2,))]
    assert [g.rank for g in complex_homology([[[2]]], PrimeField(2), [1, 1])] == [1, 1]
    with pytest.raises(ValueError):
        complex_homology([[[1]], [[1]]], ZZ, [1, 1, 1])
