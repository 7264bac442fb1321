"""Sheaf descriptors on ringed finite spaces.

Four families are supported:

``StructureSheaf``
    the structure sheaf ``O``.
``PatternSheaf``
    ``k_V``: the constant sheaf on an up-set ``V`` extended by zero.
``FracMonoSheaf``
    finite direct sums of line modules ``x^a R_S`` inside ``k(x)``.
``AbelianSheaf``
    finitely presented stalks with restriction matrices (topological universe).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .linalg import (
    Matrix,
    Ring,
    coerce_matrix,
    column_basis,
    identity,
    matmul,
    module_map_is_iso,
    module_map_is_surjective,
    ncols,
    ring_from_name,
    solve_in_basis,
)
from .poset import bits
from .rational import ALL, PoleError, PoleSet
from .space import InputError, MorphismDescriptor, RingedFiniteSpace, format_poles


def zeros(rows: int, cols: int) -> Matrix:
    return [[0] * cols for _ in range(rows)]


class UnrepresentableError(ValueError):
    """The result exists but lies outside the supported descriptor families."""


class UnsupportedError(ValueError):
    """The requested computation is not implemented for this input family."""


@dataclass(frozen=True)
class StructureSheaf:
    kind = "structure"

    def to_json(self, space: RingedFiniteSpace) -> dict:
        return {"kind": "structure"}


@dataclass(frozen=True)
class PatternSheaf:
    support: int
    kind = "pattern"

    def to_json(self, space: RingedFiniteSpace) -> dict:
        return {"kind": "pattern", "support": space.poset.members(self.support)}


# ---------------------------------------------------------------------------
# fractional monomial modules


@dataclass(frozen=True)
class FracLine:
    """Per point ``t`` the module ``x^{exps[t]} R_{poles[t]}``."""

    exps: tuple[int, ...]
    poles: tuple[PoleSet, ...]


@dataclass(frozen=True)
class FracMonoSheaf:
    summands: tuple[FracLine, ...]
    kind = "fracmono"

    def to_json(self, space: RingedFiniteSpace) -> dict:
        names = space.universe.names
        out = []
        for line in self.summands:
            out.append(
                {p: {"exp": line.exps[i], "poles": line.poles[i].to_json(names)} for i, p in enumerate(space.points)}
            )
        if len(out) == 1:
            return {"kind": "fracmono", "data": out[0]}
        return {"kind": "fracmono", "summands": out}


def structure_as_fracmono(space: RingedFiniteSpace) -> FracMonoSheaf:
    return FracMonoSheaf((FracLine((0,) * len(space), tuple(space.poles)),))


def laurent_range(exp: int, poles: PoleSet, universe) -> tuple[int | None, int | None]:
    """Degrees ``d`` with ``x^d ∈ x^exp R_poles`` as ``(lo, hi)``; None is unbounded."""
    zero, inf = universe.zero_place, universe.infinity
    lo = None if (zero is not None and poles.contains(zero)) else exp
    hi = None if (inf is not None and poles.contains(inf)) else exp
    return lo, hi


def polar_classes(universe) -> tuple[str, ...]:
    """Non-Laurent classes of a fractional module: finite places other than ``x``, then unlisted."""
    zero = universe.zero_place
    return tuple(f"place:{p.name}" for p in universe.finite_places if p.name != zero) + ("unlisted",)


def has_class(poles: PoleSet, cls: str) -> bool:
    if cls == "unlisted":
        return poles.is_all
    return poles.contains(cls.split(":", 1)[1])


def in_family(exp: int, poles: PoleSet, universe) -> bool:
    """Is ``x^exp R_poles`` a sum of graded pieces (the supported family)?"""
    if exp == 0 or poles.is_all:
        return True
    allowed = {universe.zero_place, universe.infinity} - {None}
    return poles.places <= allowed


def line_equal(a: tuple[int, PoleSet], b: tuple[int, PoleSet], universe) -> bool:
    """``x^a R_S == x^b R_S'`` for members of the family (or a unit shift)."""
    (ea, sa), (eb, sb) = a, b
    if sa != sb:
        return False
    if ea == eb or sa.is_all:
        return True
    zero, inf = universe.zero_place, universe.infinity
    return zero is not None and inf is not None and sa.contains(zero) and sa.contains(inf)


def line_contains(small: tuple[int, PoleSet], big: tuple[int, PoleSet], universe) -> bool:
    (ea, sa), (eb, sb) = small, big
    lo_a, hi_a = laurent_range(ea, sa, universe)
    lo_b, hi_b = laurent_range(eb, sb, universe)
    if lo_b is not None and (lo_a is None or lo_a < lo_b):
        return False
    if hi_b is not None and (hi_a is None or hi_a > hi_b):
        return False
    return all(has_class(sb, c) for c in polar_classes(universe) if has_class(sa, c))


# ---------------------------------------------------------------------------
# abelian sheaves


@dataclass(frozen=True, eq=False)
class AbelianSheaf:
    """Stalk ``t`` is ``R^{gens[t]} / span(relations[t])``.

    ``restrictions[(a, b)]`` is a ``gens[b] x gens[a]`` matrix for each Hasse
    edge ``a < b``.
    """

    ring: Ring
    gens: tuple[int, ...]
    relations: tuple[Matrix, ...]
    restrictions: dict = field(default_factory=dict)
    kind = "abelian"

    def restriction(self, space: RingedFiniteSpace, a: int, b: int) -> Matrix:
        """Composite restriction ``F_a -> F_b`` for ``a <= b``."""
        cache = self.__dict__.setdefault("_res_cache", {})
        if (a, b) in cache:
            return cache[(a, b)]
        poset = space.poset
        ga, gb = self.gens[a], self.gens[b]
        if a == b:
            out = identity(ga)
        elif not poset.lt(a, b):
            raise ValueError("restriction needs a <= b")
        elif not ga or not gb:
            out = zeros(gb, ga)
        else:
            step = next(c for (x, c) in poset.hasse if x == a and poset.leq(c, b))
            out = self.through(space, a, step, b)
        cache[(a, b)] = out
        return out

    def through(self, space: RingedFiniteSpace, a: int, c: int, b: int) -> Matrix:
        """``F_a -> F_c -> F_b`` with ``a < c`` a Hasse edge."""
        if not self.gens[c] or not self.gens[a] or not self.gens[b]:
            return zeros(self.gens[b], self.gens[a])
        return matmul(self.restriction(space, c, b), self.restrictions[(a, c)], self.ring)

    def to_json(self, space: RingedFiniteSpace) -> dict:
        stalks = {}
        for i, p in enumerate(space.points):
            stalks[p] = {"gens": self.gens[i], "relations": [list(map(_scalar, r)) for r in self.relations[i]]}
        res = [
            {"from": space.points[a], "to": space.points[b], "matrix": [list(map(_scalar, r)) for r in m]}
            for (a, b), m in sorted(self.restrictions.items())
        ]
        return {"kind": "abelian", "ring": self.ring.name, "stalks": stalks, "restrictions": res}


def _scalar(v):
    if getattr(v, "denominator", 1) == 1:
        return int(v)
    return str(v)


def constant_sheaf(space: RingedFiniteSpace, gens: int = 1, relations: Matrix | None = None, ring: Ring | None = None) -> AbelianSheaf:
    ring = ring or space.ring
    rel = relations if relations is not None else [[] for _ in range(gens)]
    n = len(space)
    return AbelianSheaf(
        ring,
        (gens,) * n,
        tuple(rel for _ in range(n)),
        {edge: identity(gens) for edge in space.poset.hasse},
    )


def pattern_as_abelian(space: RingedFiniteSpace, support: int, ring: Ring | None = None) -> AbelianSheaf:
    ring = ring or space.ring
    gens = tuple(1 if support >> i & 1 else 0 for i in range(len(space)))
    res = {}
    for a, b in space.poset.hasse:
        res[(a, b)] = [[1]] if gens[a] and gens[b] else zeros(gens[b], gens[a])
    return AbelianSheaf(ring, gens, tuple([[] for _ in range(g)] for g in gens), res)


def _in_span(cols: Matrix, rel: Matrix, nrows: int, ring: Ring) -> bool:
    """Are the columns of ``cols`` inside the span of the relation columns?"""
    if not ncols(cols) or nrows == 0:
        return True
    if all(ring.size(v) == 0 for row in cols for v in row):
        return True
    if not ncols(rel):
        return False
    basis = column_basis(rel, nrows, ring)
    if not ncols(basis):
        return False
    return solve_in_basis(basis, cols, nrows, ring) is not None


def check_abelian(space: RingedFiniteSpace, sheaf: AbelianSheaf) -> None:
    """Shapes, module-map property on relations, and path independence."""
    poset, ring = space.poset, sheaf.ring
    n = len(space)
    if len(sheaf.gens) != n or len(sheaf.relations) != n:
        raise InputError("abelian sheaf must give a stalk for every point")
    for i in range(n):
        rel = sheaf.relations[i]
        if sheaf.gens[i] and ncols(rel) and any(len(r) != ncols(rel) for r in rel):
            raise InputError("ragged relation matrix", where=f"point {space.points[i]}")
        if len(rel) != sheaf.gens[i] and not (sheaf.gens[i] == 0):
            raise InputError("relation matrix must have one row per generator", where=f"point {space.points[i]}")
    for a, b in poset.hasse:
        where = f"edge {space.points[a]}<{space.points[b]}"
        if (a, b) not in sheaf.restrictions:
            raise InputError("missing restriction matrix", where=where)
        m = sheaf.restrictions[(a, b)]
        ga, gb = sheaf.gens[a], sheaf.gens[b]
        if gb and (len(m) != gb or any(len(r) != ga for r in m)):
            raise InputError(f"restriction must be {gb}x{ga}", where=where)
        if ga and gb and ncols(sheaf.relations[a]):
            image = matmul(m, sheaf.relations[a], ring)
            if not _in_span(image, sheaf.relations[b], gb, ring):
                raise InputError("restriction does not respect stalk relations", where=where)
    for a in range(n):
        for b in bits(poset.up[a]):
            if a == b or not sheaf.gens[b] or not sheaf.gens[a]:
                continue
            ref = sheaf.restriction(space, a, b)
            for (x, c) in poset.hasse:
                if x != a or not poset.leq(c, b):
                    continue
                other = sheaf.through(space, a, c, b)
                diff = [[ring.coerce(u - v) for u, v in zip(r1, r2)] for r1, r2 in zip(ref, other)]
                if not _in_span(diff, sheaf.relations[b], sheaf.gens[b], ring):
                    raise InputError(
                        "restrictions do not commute",
                        where=f"chain {space.points[a]}<{space.points[c]}<={space.points[b]}",
                    )


# ---------------------------------------------------------------------------
# JSON


def sheaf_from_json(space: RingedFiniteSpace, doc: dict):
    kind = doc.get("kind")
    if kind == "structure":
        return StructureSheaf()
    if kind == "pattern":
        try:
            mask = space.poset.mask_of(map(str, doc.get("support", [])))
        except ValueError as exc:
            raise InputError(str(exc), where="pattern support") from None
        if not space.poset.is_open(mask):
            raise InputError("pattern support is not an up-set", where="pattern support")
        return PatternSheaf(mask)
    if kind == "fracmono":
        if not space.is_rational:
            raise InputError("fracmono sheaves need the rational universe")
        raw = doc.get("summands") or ([doc["data"]] if "data" in doc else None)
        if not raw:
            raise InputError("fracmono sheaf needs 'data' or 'summands'")
        lines = []
        for summand in raw:
            exps, poles = [], []
            for p in space.points:
                entry = _lookup(space, summand, p)
                if entry is None:
                    raise InputError("missing fracmono datum", where=f"point {p}")
                try:
                    exps.append(int(entry.get("exp", 0)))
                    poles.append(space.universe.pole_set(entry.get("poles", [])))
                except (PoleError, TypeError, ValueError) as exc:
                    raise InputError(str(exc), where=f"point {p}") from None
            lines.append(FracLine(tuple(exps), tuple(poles)))
        sheaf = FracMonoSheaf(tuple(lines))
        check_fracmono(space, sheaf)
        return sheaf
    if kind == "abelian":
        if space.is_rational:
            raise InputError("abelian sheaves are only supported in the topological universe")
        try:
            ring = ring_from_name(str(doc.get("ring", space.ring.name)))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if ring != space.ring:
            raise InputError(f"sheaf ring {ring.name} differs from the space ring {space.ring.name}")
        if "constant" in doc:
            st = doc["constant"]
            gens = int(st.get("gens", 1))
            rel = coerce_matrix(st.get("relations") or [[] for _ in range(gens)], ring) if gens else []
            sheaf = constant_sheaf(space, gens, rel, ring)
            check_abelian(space, sheaf)
            return sheaf
        stalks = doc.get("stalks", {})
        gens, rels = [], []
        for p in space.points:
            st = _lookup(space, stalks, p)
            if st is None:
                raise InputError("missing stalk", where=f"point {p}")
            g = int(st.get("gens", 0))
            gens.append(g)
            raw_rel = st.get("relations") or []
            rels.append(coerce_matrix(raw_rel, ring) if raw_rel else [[] for _ in range(g)])
        res = {}
        for entry in doc.get("restrictions", []):
            try:
                a, b = space.poset.idx(str(entry["from"])), space.poset.idx(str(entry["to"]))
            except (KeyError, ValueError) as exc:
                raise InputError(f"bad restriction entry: {exc}") from None
            if (a, b) not in space.poset.hasse:
                raise InputError("restrictions must be given on Hasse edges", where=f"edge {entry['from']}<{entry['to']}")
            res[(a, b)] = coerce_matrix(entry.get("matrix", []), ring) if gens[b] else []
        for a, b in space.poset.hasse:
            if (a, b) not in res:
                if gens[a] == gens[b]:
                    res[(a, b)] = identity(gens[a])
                elif not gens[b]:
                    res[(a, b)] = []
                elif not gens[a]:
                    res[(a, b)] = [[] for _ in range(gens[b])]
        sheaf = AbelianSheaf(ring, tuple(gens), tuple(rels), res)
        check_abelian(space, sheaf)
        return sheaf
    raise InputError(f"unknown sheaf kind {kind!r}")


def _lookup(space: RingedFiniteSpace, table: dict, point: str):
    if point in table:
        return table[point]
    for label, rep in space.poset.classes.items():
        if rep == point and label in table:
            return table[label]
    return None


def check_fracmono(space: RingedFiniteSpace, sheaf: FracMonoSheaf) -> None:
    universe = space.universe
    for line in sheaf.summands:
        for i, p in enumerate(space.points):
            a, s = line.exps[i], line.poles[i]
            if not in_family(a, s, universe):
                raise InputError(
                    f"x^{a} R_{format_poles(s, universe)} is outside the supported family "
                    "(nonzero exponents need poles inside {zero, inf} or ALL)",
                    where=f"point {p}",
                )
            if a != 0 and universe.zero_place is None:
                raise InputError("nonzero exponents need the place x to be declared", where=f"point {p}")
            if not space.poles[i].issubset(s):
                raise InputError(
                    f"x^{a} R_{format_poles(s, universe)} is not a module over O_{p}",
                    where=f"point {p}",
                )
        for a, b in space.poset.hasse:
            if not line_contains((line.exps[a], line.poles[a]), (line.exps[b], line.poles[b]), universe):
                raise InputError("stalks do not include along the restriction", where=f"edge {space.points[a]}<{space.points[b]}")


# ---------------------------------------------------------------------------
# quasi-coherence


@dataclass(frozen=True)
class QcVerdict:
    verdict: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.verdict


def _edges(space: RingedFiniteSpace, paranoid: bool):
    return space.poset.strict_pairs if paranoid else space.poset.hasse


def is_quasi_coherent(space: RingedFiniteSpace, sheaf, mode: str = "qc", paranoid: bool = False) -> QcVerdict:
    """Base-change isomorphism (``qc``) or surjectivity plus finite generation (``finite_type``)."""
    if mode not in ("qc", "finite_type"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(sheaf, StructureSheaf):
        return QcVerdict(True)
    if isinstance(sheaf, PatternSheaf):
        if space.is_rational:
            raise InputError("a pattern sheaf is not an O-module in the rational universe")
        sheaf = pattern_as_abelian(space, sheaf.support)
    failures = []
    if isinstance(sheaf, AbelianSheaf):
        if space.is_rational:
            raise InputError("abelian sheaves need the topological universe")
        for a, b in _edges(space, paranoid):
            m = sheaf.restriction(space, a, b)
            ga, gb = sheaf.gens[a], sheaf.gens[b]
            if mode == "qc":
                ok = module_map_is_iso(m, sheaf.relations[a], sheaf.relations[b], ga, gb, sheaf.ring)
            else:
                ok = module_map_is_surjective(m, sheaf.relations[b], ga, gb, sheaf.ring)
            if not ok:
                failures.append(f"{space.points[a]}<{space.points[b]}")
        return QcVerdict(not failures, tuple(failures))
    if isinstance(sheaf, FracMonoSheaf):
        universe = space.universe
        for k, line in enumerate(sheaf.summands):
            tag = f"summand {k}: " if len(sheaf.summands) > 1 else ""
            if mode == "finite_type":
                for i, p in enumerate(space.points):
                    if line.poles[i] != space.poles[i]:
                        failures.append(f"{tag}stalk at {p} is not finitely generated")
            for a, b in _edges(space, paranoid):
                ok = _fracmono_edge(space, line, a, b, mode)
                if not ok:
                    failures.append(f"{tag}{space.points[a]}<{space.points[b]}")
        return QcVerdict(not failures, tuple(failures))
    raise InputError(f"unsupported sheaf {type(sheaf).__name__}")


def _fracmono_edge(space: RingedFiniteSpace, line: FracLine, a: int, b: int, mode: str) -> bool:
    universe = space.universe
    tp, tq = space.poles[a], space.poles[b]
    ap, sp = line.exps[a], line.poles[a]
    aq, sq = line.exps[b], line.poles[b]
    image = sp.union(tq)
    same = image == sq and line_equal((ap, sq), (aq, sq), universe)
    if mode == "finite_type" or not tp.is_empty or tq.is_empty:
        return same
    return same and sp.is_empty


# ---------------------------------------------------------------------------
# pullback and pushforward


def pullback(f: MorphismDescriptor, sheaf):
    """Stalkwise base change ``F_{f(x)} ⊗ O_x``."""
    src, tgt = f.source, f.target
    if isinstance(sheaf, StructureSheaf):
        return sheaf
    if isinstance(sheaf, PatternSheaf):
        return PatternSheaf(f.preimage(sheaf.support))
    if isinstance(sheaf, FracMonoSheaf):
        universe = src.universe
        lines = []
        for line in sheaf.summands:
            exps, poles = [], []
            for x in range(len(src)):
                y = f.mapping[x]
                a, s = line.exps[y], line.poles[y]
                if tgt.poles[y].is_empty and not s.is_empty:
                    if not src.poles[x].is_empty:
                        raise UnrepresentableError(
                            f"M_{tgt.points[y]} ⊗_k O_{src.points[x]} is not a submodule of k(x)"
                        )
                new = s.union(src.poles[x])
                if not in_family(a, new, universe):
                    raise UnrepresentableError(f"x^{a} R_{format_poles(new, universe)} at {src.points[x]}")
                exps.append(a)
                poles.append(new)
            lines.append(FracLine(tuple(exps), tuple(poles)))
        return FracMonoSheaf(tuple(lines))
    if isinstance(sheaf, AbelianSheaf):
        res = {}
        for a, b in src.poset.hasse:
            ya, yb = f.mapping[a], f.mapping[b]
            res[(a, b)] = sheaf.restriction(tgt, ya, yb)
        return AbelianSheaf(
            sheaf.ring,
            tuple(sheaf.gens[y] for y in f.mapping),
            tuple(sheaf.relations[y] for y in f.mapping),
            res,
        )
    raise InputError(f"unsupported sheaf {type(sheaf).__name__}")


def tilde(space: RingedFiniteSpace, module):
    """``~M`` for a module over the global ring.

    ``module`` is ``(exp, poles)`` for a fractional line over ``R_{∩T}`` in the
    rational universe, or ``(gens, relations)`` in the topological universe.
    """
    from .space import morphism_to_point

    if space.is_rational:
        base = space.common_poles(space.poset.full)
        f = morphism_to_point(space, base)
        exp, poles = module
        point_sheaf = FracMonoSheaf((FracLine((exp,), (poles,)),))
        check_fracmono(f.target, point_sheaf)
        return pullback(f, point_sheaf)
    f = morphism_to_point(space)
    gens, rel = module
    return pullback(f, AbelianSheaf(space.ring, (gens,), (rel,), {}))


def pushforward(f: MorphismDescriptor, sheaf):
    """``f_*F``: the stalk at ``y`` is ``H^0(f^{-1}(U_y), F)``."""
    src, tgt = f.source, f.target
    if isinstance(sheaf, (StructureSheaf, FracMonoSheaf)) and src.is_rational:
        lines = sheaf.summands if isinstance(sheaf, FracMonoSheaf) else structure_as_fracmono(src).summands
        out = []
        for line in lines:
            exps, poles = [], []
            for y in range(len(tgt)):
                pre = f.preimage(tgt.poset.up[y])
                comps = src.poset.connected_components(pre)
                if len(comps) != 1:
                    raise UnrepresentableError(
                        f"H^0 over the preimage of U_{tgt.points[y]} is a product of {len(comps)} modules"
                    )
                a, s = sections_line(src, line, pre)
                exps.append(a)
                poles.append(s)
            out.append(FracLine(tuple(exps), tuple(poles)))
        return FracMonoSheaf(tuple(out))
    if isinstance(sheaf, StructureSheaf):
        sheaf = constant_sheaf(src)
    if isinstance(sheaf, PatternSheaf):
        pushed = _push_abelian(f, pattern_as_abelian(src, sheaf.support))
        support = 0
        for y in range(len(tgt)):
            if pushed.gens[y] > 1:
                raise UnrepresentableError("pushforward of a pattern sheaf is not a pattern sheaf")
            if pushed.gens[y]:
                support |= 1 << y
        if not tgt.poset.is_open(support):
            raise UnrepresentableError("pushforward of a pattern sheaf is not a pattern sheaf")
        for (a, b), m in pushed.restrictions.items():
            if pushed.gens[a] and pushed.gens[b] and not tgt.ring.is_unit(m[0][0]):
                raise UnrepresentableError("pushforward of a pattern sheaf is not a pattern sheaf")
        return PatternSheaf(support)
    if isinstance(sheaf, AbelianSheaf):
        return _push_abelian(f, sheaf)
    raise InputError(f"unsupported sheaf {type(sheaf).__name__}")


def sections_line(space: RingedFiniteSpace, line: FracLine, mask: int) -> tuple[int, PoleSet]:
    """``∩_{t ∈ mask} x^{a_t} R_{S_t}`` written back as ``(a, S)``."""
    universe = space.universe
    lo, hi = None, None
    polar = None
    for t in bits(mask):
        l, h = laurent_range(line.exps[t], line.poles[t], universe)
        if l is not None:
            lo = l if lo is None else max(lo, l)
        if h is not None:
            hi = h if hi is None else min(hi, h)
        here = {c for c in polar_classes(universe) if has_class(line.poles[t], c)}
        polar = here if polar is None else polar & here
    polar = polar or set()
    if "unlisted" in polar:
        return 0, ALL
    places = frozenset(c.split(":", 1)[1] for c in polar)
    zero, inf = universe.zero_place, universe.infinity
    if lo is None and hi is None:
        return 0, PoleSet(places | ({zero, inf} - {None}))
    if lo is not None and hi is not None and lo > hi:
        raise UnrepresentableError("the sections module is zero")
    if lo is not None and hi is not None and lo < hi:
        raise UnrepresentableError(f"sections span the Laurent degrees {lo}..{hi}")
    exp = lo if lo is not None else hi
    extra = set()
    if lo is None:
        extra.add(zero)
    if hi is None:
        extra.add(inf)
    poles = PoleSet(places | frozenset(extra - {None}))
    if not in_family(exp, poles, universe):
        raise UnrepresentableError(f"x^{exp} R_{format_poles(poles, universe)}")
    return exp, poles


def tensor(space: RingedFiniteSpace, left, right) -> FracMonoSheaf:
    """Stalkwise ``M_t ⊗_{O_t} N_t`` of fractional lines.

    Over a principal stalk ring both factors are flat, so the tensor product is
    the product ``x^{a+b} R_{S ∪ S'}`` inside ``k(x)``.  Over ``O_t = k`` it
    has rank one only when both factors are one-dimensional.
    """
    if not space.is_rational:
        raise InputError("tensor products of fractional lines need the rational universe")
    left, right = (structure_as_fracmono(space) if isinstance(s, StructureSheaf) else s for s in (left, right))
    universe = space.universe
    lines = []
    for a, b in itertools.product(left.summands, right.summands):
        exps, poles = [], []
        for t in range(len(space)):
            sa, sb = a.poles[t], b.poles[t]
            if space.poles[t].is_empty and not (sa.is_empty and sb.is_empty):
                raise UnrepresentableError(f"tensor over k at {space.points[t]} is not a line")
            exp, s = a.exps[t] + b.exps[t], sa.union(sb)
            if not in_family(exp, s, universe):
                raise UnrepresentableError(f"x^{exp} R_{format_poles(s, universe)} at {space.points[t]}")
            exps.append(exp)
            poles.append(s)
        lines.append(FracLine(tuple(exps), tuple(poles)))
    return FracMonoSheaf(tuple(lines))


def _push_abelian(f: MorphismDescriptor, sheaf: AbelianSheaf) -> AbelianSheaf:
    from .cohomology import sections_presentation

    src, tgt = f.source, f.target
    ring = sheaf.ring
    pres = []
    for y in range(len(tgt)):
        pres.append(sections_presentation(src, sheaf, f.preimage(tgt.poset.up[y])))
    gens = tuple(p.ngens for p in pres)
    rels = tuple(p.relations for p in pres)
    res = {}
    for a, b in tgt.poset.hasse:
        res[(a, b)] = pres[a].restrict_to(pres[b], ring)
    return AbelianSheaf(ring, gens, rels, res)


def sheaf_to_json(space: RingedFiniteSpace, sheaf) -> dict:
    return sheaf.to_json(space)
