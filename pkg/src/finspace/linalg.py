"""Exact linear algebra over the integers, the rationals and prime fields.

Matrices are plain lists of rows.  Scalars are Python ints (integers and
prime fields, the latter reduced to ``0 <= a < p``) or ``Fraction`` (rationals).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Matrix = list[list]


class Ring:
    """A Euclidean coefficient ring: ZZ, QQ or GF(p)."""

    name: str
    is_field: bool
    characteristic: int

    def coerce(self, value):
        raise NotImplementedError

    def is_unit(self, a) -> bool:
        raise NotImplementedError

    def size(self, a) -> int:
        """Euclidean size used for pivot choice (0 only for zero)."""
        raise NotImplementedError

    def quo(self, a, b):
        """Euclidean quotient of ``a`` by nonzero ``b``."""
        raise NotImplementedError

    def divides(self, b, a) -> bool:
        raise NotImplementedError

    def normalize(self, a):
        """Return the unit ``u`` making ``u * a`` canonical."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name

    def __eq__(self, other) -> bool:
        return isinstance(other, Ring) and self.name == other.name

    def __hash__(self) -> int:
        return hash(self.name)


class IntegerRing(Ring):
    name = "Z"
    is_field = False
    characteristic = 0

    def coerce(self, value):
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise ValueError(f"{value} is not an integer")
            return value.numerator
        return int(value)

    def is_unit(self, a) -> bool:
        return a in (1, -1)

    def size(self, a) -> int:
        return abs(a)

    def quo(self, a, b):
        return a // b

    def divides(self, b, a) -> bool:
        return a == 0 if b == 0 else a % b == 0

    def normalize(self, a):
        return -1 if a < 0 else 1


class RationalField(Ring):
    name = "Q"
    is_field = True
    characteristic = 0

    def coerce(self, value):
        return Fraction(value)

    def is_unit(self, a) -> bool:
        return a != 0

    def size(self, a) -> int:
        return 0 if a == 0 else 1

    def quo(self, a, b):
        return Fraction(a) / b

    def divides(self, b, a) -> bool:
        return b != 0 or a == 0

    def normalize(self, a):
        return 1 if a == 0 else 1 / Fraction(a)

    def inv(self, a):
        return 1 / Fraction(a)


class PrimeField(Ring):
    is_field = True

    def __init__(self, p: int):
        if p < 2 or p > 2**31 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise ValueError(f"modulus {p} is not a prime <= 2^31")
        self.p = p
        self.characteristic = p
        self.name = f"F{p}"

    def coerce(self, value):
        if isinstance(value, Fraction):
            return value.numerator * pow(value.denominator, -1, self.p) % self.p
        return int(value) % self.p

    def is_unit(self, a) -> bool:
        return a % self.p != 0

    def size(self, a) -> int:
        return 0 if a % self.p == 0 else 1

    def quo(self, a, b):
        return a * pow(b, -1, self.p) % self.p

    def divides(self, b, a) -> bool:
        return b % self.p != 0 or a % self.p == 0

    def normalize(self, a):
        return 1 if a % self.p == 0 else pow(a, -1, self.p)

    def inv(self, a):
        return pow(a, -1, self.p)


ZZ = IntegerRing()
QQ = RationalField()


def ring_from_name(name: str) -> Ring:
    """Parse ``Z``, ``Q`` or ``F<p>`` / ``GF(p)``."""
    text = name.strip()
    if text in ("Z", "ZZ"):
        return ZZ
    if text in ("Q", "QQ"):
        return QQ
    for prefix in ("GF(", "F_", "F"):
        if text.startswith(prefix):
            digits = text[len(prefix):].rstrip(")")
            if digits.isdigit():
                return PrimeField(int(digits))
    raise ValueError(f"unknown coefficient ring {name!r}")


def _reduce(ring: Ring, value):
    if isinstance(ring, PrimeField):
        return value % ring.p
    return value


def coerce_matrix(matrix: Sequence[Sequence], ring: Ring) -> Matrix:
    return [[ring.coerce(v) for v in row] for row in matrix]


def identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def matmul(a: Matrix, b: Matrix, ring: Ring | None = None) -> Matrix:
    if not a or not b:
        cols = len(b[0]) if b else 0
        return [[0] * cols for _ in a]
    columns = list(zip(*b))
    out = [[sum(x * y for x, y in zip(row, col)) for col in columns] for row in a]
    if ring is not None:
        out = [[_reduce(ring, v) for v in row] for row in out]
    return out


def transpose(a: Matrix, cols: int | None = None) -> Matrix:
    if not a:
        return [[] for _ in range(cols or 0)]
    return [list(col) for col in zip(*a)]


def is_zero_matrix(a: Matrix, ring: Ring) -> bool:
    return all(ring.size(v) == 0 for row in a for v in row)


# ---------------------------------------------------------------------------
# rank


def rank(matrix: Sequence[Sequence], ring: Ring = QQ) -> int:
    """Rank over a field, or over ZZ (which equals the rank over QQ)."""
    rows = [list(r) for r in matrix if any(r)]
    if not rows:
        return 0
    if isinstance(ring, PrimeField):
        return _rank_mod_p(rows, ring.p)
    if all(isinstance(v, int) for r in rows for v in r):
        return _rank_bareiss(rows)
    scaled = []
    for r in rows:
        den = 1
        for v in r:
            den = den * Fraction(v).denominator // _gcd(den, Fraction(v).denominator)
        scaled.append([int(Fraction(v) * den) for v in r])
    return _rank_bareiss(scaled)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    rows = [[v % p for v in r] for r in rows]
    ncols = len(rows[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = pow(rows[r][c], -1, p)
        prow = [v * inv % p for v in rows[r]]
        rows[r] = prow
        for i in range(r + 1, len(rows)):
            f = rows[i][c]
            if f:
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], prow)]
        r += 1
        if r == len(rows):
            break
    return r


def _rank_bareiss(rows: list[list[int]]) -> int:
    # fraction-free elimination; every division below is exact
    ncols = len(rows[0])
    r = 0
    prev = 1
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        for i in range(r + 1, len(rows)):
            f = rows[i][c]
            row = rows[i]
            prow = rows[r]
            rows[i] = [(pv * row[j] - f * prow[j]) // prev for j in range(ncols)]
        prev = pv
        r += 1
        if r == len(rows):
            break
    return r


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithForm:
    """``left @ matrix @ right == diagonal`` with unimodular certificates.

    ``left_inverse`` is the inverse of ``left``; it is kept because column
    spans are read off from it.
    """

    invariants: tuple
    diagonal: Matrix
    left: Matrix
    right: Matrix
    left_inverse: Matrix
    right_inverse: Matrix

    @property
    def rank(self) -> int:
        return len(self.invariants)


def smith_normal_form(matrix: Sequence[Sequence], ring: Ring = ZZ) -> SmithForm:
    """Smith normal form with certificates over a Euclidean ring.

    Over a field every invariant is 1.  The certificates are verified by
    multiplication before returning.
    """
    a = coerce_matrix(matrix, ring)
    m = len(a)
    n = len(a[0]) if m else 0
    left, left_inv = identity(m), identity(m)
    right, right_inv = identity(n), identity(n)

    def add_row(src: int, dst: int, factor) -> None:
        # row[dst] += factor * row[src]
        for mat in (a, left):
            mat[dst] = [_reduce(ring, x + factor * y) for x, y in zip(mat[dst], mat[src])]
        for row in left_inv:
            row[src] = _reduce(ring, row[src] - factor * row[dst])

    def add_col(src: int, dst: int, factor) -> None:
        # col[dst] += factor * col[src]
        for mat in (a, right):
            for row in mat:
                row[dst] = _reduce(ring, row[dst] + factor * row[src])
        right_inv[src] = [_reduce(ring, x - factor * y) for x, y in zip(right_inv[src], right_inv[dst])]

    def swap_rows(i: int, j: int) -> None:
        if i == j:
            return
        for mat in (a, left):
            mat[i], mat[j] = mat[j], mat[i]
        for row in left_inv:
            row[i], row[j] = row[j], row[i]

    def swap_cols(i: int, j: int) -> None:
        if i == j:
            return
        for mat in (a, right):
            for row in mat:
                row[i], row[j] = row[j], row[i]
        right_inv[i], right_inv[j] = right_inv[j], right_inv[i]

    def scale_row(i: int, unit) -> None:
        inv = ring.quo(1, unit)
        a[i] = [_reduce(ring, x * unit) for x in a[i]]
        left[i] = [_reduce(ring, x * unit) for x in left[i]]
        for row in left_inv:
            row[i] = _reduce(ring, row[i] * inv)

    invariants = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                s = ring.size(a[i][j])
                if s and (best is None or s < best[0]):
                    best = (s, i, j)
                    if s == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i0, j0 = best
        swap_rows(t, i0)
        swap_cols(t, j0)
        while True:
            pivot = a[t][t]
            moved = False
            for i in range(t + 1, m):
                if ring.size(a[i][t]):
                    add_row(t, i, -ring.quo(a[i][t], pivot))
                    if ring.size(a[i][t]):
                        moved = True
            for j in range(t + 1, n):
                if ring.size(a[t][j]):
                    add_col(t, j, -ring.quo(a[t][j], pivot))
                    if ring.size(a[t][j]):
                        moved = True
            if moved:
                # bring the smallest leftover entry of row/column t to the pivot
                cands = [(ring.size(a[i][t]), i, t) for i in range(t, m) if ring.size(a[i][t])]
                cands += [(ring.size(a[t][j]), t, j) for j in range(t, n) if ring.size(a[t][j])]
                _, i1, j1 = min(cands)
                swap_rows(t, i1)
                swap_cols(t, j1)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if not ring.divides(pivot, a[i][j])),
                None,
            )
            if bad is None:
                break
            add_row(bad, t, 1)
        unit = ring.normalize(a[t][t])
        if unit != 1:
            scale_row(t, unit)
        invariants.append(a[t][t])
        t += 1

    form = SmithForm(tuple(invariants), a, left, right, left_inv, right_inv)
    if m and n:
        assert matmul(matmul(left, coerce_matrix(matrix, ring), ring), right, ring) == a
    return form


def _sparse_rows(matrix: Sequence[Sequence], ring: Ring) -> dict[int, dict[int, object]]:
    rows = {}
    for i, r in enumerate(matrix):
        entries = {}
        for j, v in enumerate(r):
            v = ring.coerce(v)
            if ring.size(v):
                entries[j] = v
        if entries:
            rows[i] = entries
    return rows


def _sparse_product_vanishes(a: Matrix, b: Matrix, ring: Ring) -> bool:
    """Is ``a @ b`` zero?  Both factors are usually very sparse incidence matrices."""
    rows_b = _sparse_rows(b, ring)
    for row in _sparse_rows(a, ring).values():
        acc: dict[int, object] = {}
        for k, v in row.items():
            for j, w in rows_b.get(k, {}).items():
                acc[j] = acc.get(j, 0) + v * w
        if any(ring.size(_reduce(ring, x)) for x in acc.values()):
            return False
    return True


def _eliminate_units(matrix: Sequence[Sequence], ring: Ring) -> tuple[int, Matrix]:
    """Pivot on unit entries until none is left.

    Each unit pivot contributes an invariant factor 1 and leaves the invariant
    factors of the remaining block unchanged.  Pivots are chosen to keep the
    rows sparse (smallest row length times column count).
    """
    rows = _sparse_rows(matrix, ring)
    cols: dict[int, set[int]] = {}
    for i, entries in rows.items():
        for j in entries:
            cols.setdefault(j, set()).add(i)
    pivots = 0
    while rows:
        best = None
        for i, entries in rows.items():
            for j, v in entries.items():
                if ring.is_unit(v):
                    cost = (len(entries) - 1) * (len(cols[j]) - 1)
                    if best is None or cost < best[0]:
                        best = (cost, i, j)
                        if cost == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        _, i, j = best
        prow = rows.pop(i)
        for c in prow:
            cols[c].discard(i)
        inv = ring.quo(1, prow[j])
        for k in list(cols[j]):
            row = rows[k]
            factor = _reduce(ring, row[j] * inv)
            for c, v in prow.items():
                nv = _reduce(ring, row.get(c, 0) - factor * v)
                if ring.size(nv):
                    if c not in row:
                        cols[c].add(k)
                    row[c] = nv
                elif c in row:
                    del row[c]
                    cols[c].discard(k)
            if not row:
                del rows[k]
        pivots += 1
    used = sorted({j for entries in rows.values() for j in entries})
    rest = [[entries.get(j, 0) for j in used] for entries in rows.values()]
    return pivots, rest


def invariant_factors(matrix: Sequence[Sequence], ring: Ring = ZZ) -> tuple:
    """Nonzero Smith invariants (units normalized to 1) without certificates."""
    pivots, rest = _eliminate_units(matrix, ring)
    tail = smith_normal_form(rest, ring).invariants if rest else ()
    return (1,) * pivots + tuple(tail)


# ---------------------------------------------------------------------------
# lattices (submodules of R^g) and presented modules


def columns(matrix: Matrix, nrows: int) -> list[list]:
    if not matrix or not matrix[0]:
        return []
    return [list(c) for c in zip(*matrix)]


def from_columns(cols: list[list], nrows: int) -> Matrix:
    if not cols:
        return [[] for _ in range(nrows)]
    return [list(r) for r in zip(*cols)]


def column_basis(gens: Matrix, nrows: int, ring: Ring) -> Matrix:
    """A basis (as columns) of the submodule spanned by the columns of ``gens``."""
    if not gens or not gens[0]:
        return [[] for _ in range(nrows)]
    form = smith_normal_form(gens, ring)
    cols = []
    for k, d in enumerate(form.invariants):
        cols.append([_reduce(ring, form.left_inverse[i][k] * d) for i in range(nrows)])
    return from_columns(cols, nrows)


def kernel_basis(matrix: Matrix, ncols: int, ring: Ring) -> Matrix:
    """Basis (as columns) of ``{v : matrix @ v == 0}``."""
    if not matrix:
        return identity(ncols)
    form = smith_normal_form(matrix, ring)
    r = form.rank
    cols = [[form.right[i][k] for i in range(ncols)] for k in range(r, ncols)]
    return from_columns(cols, ncols)


def solve_in_basis(basis: Matrix, targets: Matrix, nrows: int, ring: Ring) -> Matrix | None:
    """Coordinates ``C`` with ``basis @ C == targets`` or None if impossible.

    ``basis`` must have full column rank.
    """
    a = len(basis[0]) if basis and basis[0] else 0
    b = len(targets[0]) if targets and targets[0] else 0
    if b == 0:
        return [[] for _ in range(a)]
    if a == 0:
        return [] if is_zero_matrix(targets, ring) else None
    form = smith_normal_form(basis, ring)
    assert form.rank == a, "basis is not free"
    ut = matmul(form.left, targets, ring)
    y = []
    for i in range(nrows):
        if i < a:
            d = form.invariants[i]
            row = []
            for v in ut[i]:
                if not ring.divides(d, v):
                    return None
                row.append(ring.quo(v, d) if ring.is_field else v // d)
            y.append(row)
        elif any(ring.size(v) for v in ut[i]):
            return None
    return matmul(form.right, y, ring)


@dataclass(frozen=True)
class AbelianGroup:
    """A finitely generated module over a PID: free rank plus torsion invariants."""

    rank: int
    torsion: tuple = ()

    @property
    def is_zero(self) -> bool:
        return self.rank == 0 and not self.torsion

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": [int(t) for t in self.torsion]}

    def __str__(self) -> str:
        parts = []
        if self.rank:
            parts.append("Z" if self.rank == 1 else f"Z^{self.rank}")
        parts += [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def quotient_group(basis: Matrix, sub_gens: Matrix, nrows: int, ring: Ring) -> tuple[AbelianGroup, Matrix]:
    """The module ``span(basis) / span(sub_gens)`` and its relation matrix.

    Returns the group and the coordinates of ``sub_gens`` in ``basis``.
    """
    a = len(basis[0]) if basis and basis[0] else 0
    if a == 0:
        return AbelianGroup(0), []
    coords = solve_in_basis(basis, sub_gens, nrows, ring)
    if coords is None:
        raise ValueError("submodule is not contained in the ambient lattice")
    if not coords or not coords[0]:
        return AbelianGroup(a), coords
    form = smith_normal_form(coords, ring)
    torsion = tuple(d for d in form.invariants if not ring.is_unit(d))
    return AbelianGroup(a - form.rank, torsion), coords


def ncols(matrix: Matrix) -> int:
    return len(matrix[0]) if matrix and matrix[0] else 0


def module_map_is_surjective(phi: Matrix, rel_dst: Matrix, n_src: int, n_dst: int, ring: Ring) -> bool:
    """Do the columns of ``phi`` generate ``R^n_dst / rel_dst``?"""
    if n_dst == 0:
        return True
    dst_rel = [list(c) for c in zip(*rel_dst)] if ncols(rel_dst) else []
    phi_cols = [list(c) for c in zip(*phi)] if n_src else []
    gens = phi_cols + dst_rel
    if not gens:
        return False
    span = column_basis(from_columns(gens, n_dst), n_dst, ring)
    if ncols(span) != n_dst:
        return False
    return quotient_group(identity(n_dst), span, n_dst, ring)[0].is_zero


def module_map_is_iso(phi: Matrix, rel_src: Matrix, rel_dst: Matrix, n_src: int, n_dst: int, ring: Ring) -> bool:
    """Is ``R^n_src / rel_src -> R^n_dst / rel_dst`` induced by ``phi`` bijective?

    ``phi`` is ``n_dst x n_src``; relation matrices hold relations as columns.
    """
    src_rel = [list(c) for c in zip(*rel_src)] if ncols(rel_src) else []
    dst_rel = [list(c) for c in zip(*rel_dst)] if ncols(rel_dst) else []
    if not module_map_is_surjective(phi, rel_dst, n_src, n_dst, ring):
        return False
    if n_src == 0:
        return True
    if n_dst:
        stacked = [list(row) + [-v for v in rel] for row, rel in zip(phi, from_columns(dst_rel, n_dst))]
        kernel = kernel_basis(stacked, n_src + len(dst_rel), ring)
        preimage = kernel[:n_src]
    else:
        preimage = identity(n_src)
    if not ncols(preimage):
        return True
    pre_basis = column_basis(preimage, n_src, ring)
    if not ncols(pre_basis):
        return True
    if not src_rel:
        return False
    group, _ = quotient_group(pre_basis, from_columns(src_rel, n_src), n_src, ring)
    return group.is_zero


# ---------------------------------------------------------------------------
# complexes


@dataclass(frozen=True)
class PresentedComplex:
    """Cochain complex ``C^n = R^{gens[n]} / span(relations[n])``.

    ``differentials[n]`` is a ``gens[n+1] x gens[n]`` matrix lifting
    ``d^n : C^n -> C^{n+1}``.
    """

    ring: Ring
    gens: tuple[int, ...]
    relations: tuple[Matrix, ...]
    differentials: tuple[Matrix, ...]


def _matrix_shape_ok(mat: Matrix, rows: int, cols: int) -> bool:
    if rows == 0:
        return not mat
    return len(mat) == rows and all(len(r) == cols for r in mat)


def complex_homology(differentials: Sequence[Matrix], ring: Ring = QQ, dims: Sequence[int] | None = None) -> list[AbelianGroup]:
    """Cohomology ``ker d^i / im d^{i-1}`` of a complex of free modules.

    ``differentials[i]`` maps ``C^i`` to ``C^{i+1}``.  Over a field the group
    rank is the dimension.  A complex with ``d d != 0`` is rejected.
    """
    mats = [coerce_matrix(d, ring) for d in differentials]
    if dims is None:
        dims = []
        for i, d in enumerate(mats):
            cols = len(d[0]) if d else None
            if cols is None:
                cols = len(mats[i - 1]) if i else 0
            dims.append(cols)
        dims.append(len(mats[-1]) if mats else 0)
    dims = list(dims)
    if len(dims) < len(mats) + 1:
        raise ValueError("dims must list every term of the complex")
    for i, d in enumerate(mats):
        if not _matrix_shape_ok(d, dims[i + 1], dims[i]) and not (dims[i] == 0 and all(not r for r in d)):
            raise ValueError(f"differential {i} has the wrong shape")
    for i in range(len(mats) - 1):
        if mats[i] and mats[i + 1] and dims[i] and dims[i + 1]:
            if not _sparse_product_vanishes(mats[i + 1], mats[i], ring):
                raise ValueError(f"d^{i + 1} d^{i} != 0")
    ranks = []
    invariants = []
    for i, d in enumerate(mats):
        if dims[i] == 0 or dims[i + 1] == 0:
            ranks.append(0)
            invariants.append(())
            continue
        factors = invariant_factors(d, ring)
        ranks.append(len(factors))
        invariants.append(tuple(v for v in factors if not ring.is_unit(v)))
    out = []
    for i, n in enumerate(dims):
        out_rank = ranks[i] if i < len(ranks) else 0
        in_rank = ranks[i - 1] if i >= 1 else 0
        torsion = invariants[i - 1] if i >= 1 else ()
        out.append(AbelianGroup(n - out_rank - in_rank, torsion))
    return out


def presented_cohomology(cx: PresentedComplex) -> list[AbelianGroup]:
    """Cohomology of a complex of finitely presented modules."""
    return [group for group, _, _ in _presented_pieces(cx)]


def _presented_pieces(cx: PresentedComplex):
    """Per degree: (group, cocycle basis, relation coordinates)."""
    ring = cx.ring
    out = []
    top = len(cx.gens)
    for n in range(top):
        g = cx.gens[n]
        if g == 0:
            out.append((AbelianGroup(0), [[] for _ in range(0)], []))
            continue
        rel_next = cx.relations[n + 1] if n + 1 < top else []
        g_next = cx.gens[n + 1] if n + 1 < top else 0
        if g_next:
            d = cx.differentials[n]
            if rel_next and rel_next[0]:
                stacked = [list(dr) + [-v for v in rr] for dr, rr in zip(d, rel_next)]
            else:
                stacked = [list(dr) for dr in d]
            ker = kernel_basis(stacked, len(stacked[0]), ring)
            cocycle_gens = ker[:g]
        else:
            cocycle_gens = identity(g)
        basis = column_basis(cocycle_gens, g, ring) if cocycle_gens and cocycle_gens[0] else [[] for _ in range(g)]
        sub = [[] for _ in range(g)]
        rel = cx.relations[n]
        if rel and rel[0]:
            sub = [s + list(r) for s, r in zip(sub, rel)]
        if n >= 1 and cx.gens[n - 1]:
            sub = [s + list(r) for s, r in zip(sub, cx.differentials[n - 1])]
        if not basis[0]:
            out.append((AbelianGroup(0), basis, []))
            continue
        if not sub[0]:
            out.append((AbelianGroup(len(basis[0])), basis, [[] for _ in range(len(basis[0]))]))
            continue
        group, coords = quotient_group(basis, sub, g, ring)
        out.append((group, basis, coords))
    return out


def induced_map_is_iso(source: PresentedComplex, target: PresentedComplex, chain_map: Sequence[Matrix], degree: int) -> bool:
    """Does ``chain_map`` induce an isomorphism on ``H^degree``?"""
    ring = source.ring
    pieces_s = _presented_pieces(source)
    pieces_t = _presented_pieces(target)
    if degree >= len(pieces_s) or degree >= len(pieces_t):
        gs = pieces_s[degree][0] if degree < len(pieces_s) else AbelianGroup(0)
        gt = pieces_t[degree][0] if degree < len(pieces_t) else AbelianGroup(0)
        return gs.is_zero and gt.is_zero
    gs, basis_s, coords_s = pieces_s[degree]
    gt, basis_t, coords_t = pieces_t[degree]
    if gs.is_zero and gt.is_zero:
        return True
    if gs != gt:
        return False
    a = len(basis_s[0]) if basis_s and basis_s[0] else 0
    b = len(basis_t[0]) if basis_t and basis_t[0] else 0
    if a == 0 or b == 0:
        return False
    image = matmul(chain_map[degree], basis_s, ring)
    phi = solve_in_basis(basis_t, image, target.gens[degree], ring)
    if phi is None:
        raise ValueError("chain map does not preserve cocycles")
    return module_map_is_iso(phi, coords_s, coords_t, a, b, ring)
