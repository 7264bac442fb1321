"""Standard resolution, sheaf cohomology and base-change comparisons.

In the rational universe every restriction is an inclusion inside ``k(x)``,
so the standard complex of ``O`` (or of a fractional module) splits into
constant-coefficient summands, one per basis class of ``k(x)``.  A summand is
the complex of chains whose top lies in the up-set ``V`` of points whose
stalk contains that class.  Each class is computed once and carries a
multiplicity (finite or ``ω``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .linalg import (
    QQ,
    ZZ,
    AbelianGroup,
    Matrix,
    PresentedComplex,
    Ring,
    _presented_pieces,
    complex_homology,
    identity,
    induced_map_is_iso,
    matmul,
    ncols,
    rank,
    solve_in_basis,
)
from .poset import FinitePoset, bits
from .rational import ALL, PoleSet
from .sheaves import (
    AbelianSheaf,
    FracLine,
    FracMonoSheaf,
    PatternSheaf,
    StructureSheaf,
    UnrepresentableError,
    UnsupportedError,
    _in_span,
    constant_sheaf,
    has_class,
    in_family,
    laurent_range,
    pattern_as_abelian,
    polar_classes,
    zeros,
)
from .space import InputError, MorphismDescriptor, RingedFiniteSpace, format_poles, ring_name


class Omega:
    """The multiplicity of a countably infinite family."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ω"

    def to_json(self) -> str:
        return "omega"


OMEGA = Omega()


def mult_add(a, b):
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a + b


def mult_scale(dim: int, mult):
    if dim == 0:
        return 0
    return OMEGA if mult is OMEGA else dim * mult


# ---------------------------------------------------------------------------
# chains and pattern complexes


def _chain_index(poset: FinitePoset, mask: int) -> tuple[list, list[dict]]:
    chains = poset.all_chains(mask)
    return chains, [{c: k for k, c in enumerate(level)} for level in chains]


@dataclass(frozen=True)
class PatternComplex:
    """Chains of ``U`` with top in ``V`` and the signed differentials."""

    chains: tuple[tuple[tuple[int, ...], ...], ...]
    differentials: tuple[Matrix, ...]
    index: tuple[dict, ...] = field(repr=False)

    def dim(self, n: int) -> int:
        return len(self.chains[n]) if n < len(self.chains) else 0

    def d(self, n: int) -> Matrix:
        """``d^n``; ``n = -1`` or past the end gives a zero map."""
        if 0 <= n < len(self.differentials):
            return self.differentials[n]
        return zeros(self.dim(n + 1), self.dim(n))


def pattern_complex(poset: FinitePoset, umask: int, vmask: int) -> PatternComplex:
    """The standard complex of ``k_V`` on ``U``.

    ``(da)(x_0<...<x_{n+1}) = Σ_{i≤n} (-1)^i a(face_i) + (-1)^{n+1} a(x_0<...<x_n)``
    where the last term only survives when ``x_n ∈ V``.
    """
    if vmask & ~umask:
        raise InputError("pattern support must lie inside the open")
    if not poset.is_open(vmask) or not poset.is_open(umask):
        raise InputError("pattern support and open must be up-sets")
    cache = poset.__dict__.setdefault("_pattern_cache", {})
    key = (umask, vmask)
    hit = cache.get(key)
    if hit is not None:
        return hit
    all_chains = poset.all_chains(umask)
    levels = [tuple(c for c in level if vmask >> c[-1] & 1) for level in all_chains]
    while levels and not levels[-1]:
        levels.pop()
    index = tuple({c: k for k, c in enumerate(level)} for level in levels)
    diffs = []
    for n in range(len(levels) - 1):
        rows, cols = levels[n + 1], index[n]
        mat = [[0] * len(levels[n]) for _ in rows]
        for r, chain in enumerate(rows):
            for i in range(len(chain)):
                face = chain[:i] + chain[i + 1:]
                col = cols.get(face)
                if col is not None:
                    mat[r][col] += -1 if i % 2 else 1
        diffs.append(mat)
    out = PatternComplex(tuple(levels), tuple(diffs), index)
    cache[key] = out
    return out


def pattern_cohomology(poset: FinitePoset, umask: int, vmask: int, ring: Ring = QQ) -> list[int]:
    """Dimensions of ``H^i(U, k_V)`` for ``0 <= i <= dim U``."""
    top = poset.dimension(umask)
    cache = poset.__dict__.setdefault("_pattern_h_cache", {})
    key = (umask, vmask, ring.name)
    if key in cache:
        return list(cache[key])
    cx = pattern_complex(poset, umask, vmask)
    out = [0] * (top + 1)
    if cx.chains:
        groups = complex_homology(cx.differentials, ring, [len(c) for c in cx.chains])
        for i, g in enumerate(groups):
            out[i] = g.rank
    cache[key] = tuple(out)
    return out


def pattern_groups(poset: FinitePoset, umask: int, vmask: int, ring: Ring = ZZ) -> list[AbelianGroup]:
    """``H^i(U, R_V)`` over a PID (torsion included)."""
    top = poset.dimension(umask)
    cx = pattern_complex(poset, umask, vmask)
    out = [AbelianGroup(0)] * (top + 1)
    if cx.chains:
        for i, g in enumerate(complex_homology(cx.differentials, ring, [len(c) for c in cx.chains])):
            out[i] = g
    return out


# ---------------------------------------------------------------------------
# abelian standard complex


@dataclass(frozen=True)
class AbelianComplex:
    chains: tuple
    offsets: tuple[dict, ...]
    presented: PresentedComplex


def abelian_complex(space: RingedFiniteSpace, sheaf: AbelianSheaf, mask: int) -> AbelianComplex:
    poset, ring = space.poset, sheaf.ring
    levels = poset.all_chains(mask)
    gens, rels, offsets = [], [], []
    for level in levels:
        off, total = {}, 0
        for c in level:
            off[c] = total
            total += sheaf.gens[c[-1]]
        offsets.append(off)
        gens.append(total)
        rel_cols = []
        for c in level:
            g = sheaf.gens[c[-1]]
            rel = sheaf.relations[c[-1]]
            for k in range(ncols(rel)):
                col = [0] * total
                for j in range(g):
                    col[off[c] + j] = rel[j][k]
                rel_cols.append(col)
        rels.append([list(r) for r in zip(*rel_cols)] if rel_cols else [[] for _ in range(total)])
    diffs = []
    for n in range(len(levels) - 1):
        mat = zeros(gens[n + 1], gens[n])
        for chain in levels[n + 1]:
            r0 = offsets[n + 1][chain]
            top = chain[-1]
            for i in range(len(chain)):
                face = chain[:i] + chain[i + 1:]
                c0 = offsets[n][face]
                sign = -1 if i % 2 else 1
                if i < len(chain) - 1:
                    for j in range(sheaf.gens[top]):
                        mat[r0 + j][c0 + j] += sign
                else:
                    block = sheaf.restriction(space, face[-1], top)
                    for j in range(sheaf.gens[top]):
                        for k in range(sheaf.gens[face[-1]]):
                            mat[r0 + j][c0 + k] += sign * block[j][k]
        diffs.append([[ring.coerce(v) for v in row] for row in mat])
    cx = PresentedComplex(ring, tuple(gens), tuple(rels), tuple(diffs))
    for n in range(len(diffs) - 1):
        if gens[n] and gens[n + 2]:
            dd = matmul(diffs[n + 1], diffs[n], ring)
            assert _in_span(dd, rels[n + 2], gens[n + 2], ring), "d∘d != 0 on the standard complex"
    return AbelianComplex(tuple(levels), tuple(offsets), cx)


def projection_map(source: AbelianComplex, target: AbelianComplex, sheaf: AbelianSheaf) -> list[Matrix]:
    """Restriction of cochains from an open to a smaller open."""
    out = []
    for n, level in enumerate(target.chains):
        rows = target.presented.gens[n]
        cols = source.presented.gens[n] if n < len(source.chains) else 0
        mat = zeros(rows, cols)
        for c in level:
            r0, c0 = target.offsets[n][c], source.offsets[n][c]
            for j in range(sheaf.gens[c[-1]]):
                mat[r0 + j][c0 + j] = 1
        out.append(mat)
    return out


def _abelian_version(space: RingedFiniteSpace, sheaf) -> AbelianSheaf:
    if isinstance(sheaf, AbelianSheaf):
        return sheaf
    if isinstance(sheaf, StructureSheaf):
        return constant_sheaf(space)
    if isinstance(sheaf, PatternSheaf):
        return pattern_as_abelian(space, sheaf.support)
    raise InputError(f"{type(sheaf).__name__} is not supported in the topological universe")


# ---------------------------------------------------------------------------
# symbolic standard complex


@dataclass(frozen=True)
class StandardComplex:
    """Terms ``C^n`` indexed by chains with the stalk at the top of each chain.

    ``incidence[n]`` holds the signs of ``d^n`` (rows: ``(n+1)``-chains);
    every nonzero sign is an inclusion of stalks.  ``presented`` is filled
    in when the stalks are finitely presented.
    """

    chains: tuple[tuple[tuple[str, ...], ...], ...]
    stalks: tuple[tuple[str, ...], ...]
    incidence: tuple[Matrix, ...]
    presented: PresentedComplex | None = None

    @property
    def length(self) -> int:
        return len(self.chains) - 1

    def check(self) -> None:
        for n in range(len(self.incidence) - 1):
            dd = matmul(self.incidence[n + 1], self.incidence[n], ZZ)
            assert all(v == 0 for row in dd for v in row), "d∘d != 0"

    def to_json(self) -> dict:
        return {
            "terms": [
                [{"chain": list(c), "stalk": s} for c, s in zip(level, st)] for level, st in zip(self.chains, self.stalks)
            ],
            "differentials": [[list(map(int, r)) for r in m] for m in self.incidence],
        }


def _stalk_label(space: RingedFiniteSpace, sheaf, t: int) -> str:
    if isinstance(sheaf, PatternSheaf):
        return "k"
    if space.is_rational:
        if isinstance(sheaf, FracMonoSheaf):
            parts = []
            for line in sheaf.summands:
                a, s = line.exps[t], line.poles[t]
                base = ring_name(s, space.universe)
                parts.append(base if a == 0 else f"x^{a}*{base}")
            return " + ".join(parts)
        return ring_name(space.poles[t], space.universe)
    ab = _abelian_version(space, sheaf)
    g = ab.gens[t]
    rel = ab.relations[t]
    if not ncols(rel):
        return f"{ab.ring.name}^{g}" if g != 1 else ab.ring.name
    return f"{ab.ring.name}^{g}/<{ncols(rel)} relations>"


def standard_complex(space: RingedFiniteSpace, mask: int | None, sheaf) -> StandardComplex:
    poset = space.poset
    mask = poset.full if mask is None else mask
    if not poset.is_open(mask):
        raise InputError("the domain must be an open subset")
    if isinstance(sheaf, PatternSheaf):
        cx = pattern_complex(poset, mask, sheaf.support & mask)
        levels, diffs = cx.chains, cx.differentials
    else:
        full = pattern_complex(poset, mask, mask)
        levels, diffs = full.chains, full.differentials
    presented = None
    if not space.is_rational:
        presented = abelian_complex(space, _abelian_version(space, sheaf), mask).presented
    elif isinstance(sheaf, PatternSheaf):
        presented = PresentedComplex(space.ring, tuple(len(l) for l in levels), tuple([[] for _ in l] for l in levels), tuple(diffs))
    names = tuple(tuple(tuple(poset.points[i] for i in c) for c in level) for level in levels)
    stalks = tuple(tuple(_stalk_label(space, sheaf, c[-1]) for c in level) for level in levels)
    out = StandardComplex(names, stalks, tuple(diffs), presented)
    out.check()
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Piece:
    pattern: str
    dim: int
    multiplicity: object = 1
    torsion: tuple = ()

    def to_json(self) -> dict:
        mult = self.multiplicity.to_json() if self.multiplicity is OMEGA else self.multiplicity
        out = {"pattern": self.pattern, "dim": self.dim, "multiplicity": mult}
        if self.torsion:
            out["torsion"] = [int(t) for t in self.torsion]
        return out

    def __str__(self) -> str:
        mult = "" if self.multiplicity == 1 else f" x {self.multiplicity!r}"
        tors = "".join(f" + Z/{t}" for t in self.torsion)
        return f"{self.pattern}: {self.dim}{tors}{mult}"


@dataclass(frozen=True, eq=False)
class CohomologyReport:
    space: RingedFiniteSpace
    mask: int
    sheaf_kind: str
    degrees: tuple[tuple[Piece, ...], ...]
    groups: tuple[AbelianGroup, ...] | None = None

    def pieces(self, i: int) -> tuple[Piece, ...]:
        return self.degrees[i] if 0 <= i < len(self.degrees) else ()

    def total(self, i: int):
        """Dimension of ``H^i`` over the coefficient field (``OMEGA`` if infinite)."""
        acc = 0
        for p in self.pieces(i):
            acc = mult_add(acc, mult_scale(p.dim, p.multiplicity))
        return acc

    def group(self, i: int) -> AbelianGroup:
        if self.groups is not None:
            return self.groups[i] if i < len(self.groups) else AbelianGroup(0)
        raise ValueError("not an abelian report")

    def is_zero(self, i: int) -> bool:
        if self.groups is not None:
            return self.group(i).is_zero
        return not any(p.dim for p in self.pieces(i))

    @property
    def acyclic(self) -> bool:
        return all(self.is_zero(i) for i in range(1, len(self.degrees)))

    def dims(self, i: int) -> dict[str, tuple[int, object]]:
        return {p.pattern: (p.dim, p.multiplicity) for p in self.pieces(i)}

    def render(self, i: int) -> str:
        if self.groups is not None:
            return str(self.group(i))
        return render_pieces(self.pieces(i), self.space)

    def to_json(self) -> dict:
        out = {
            "open": self.space.poset.members(self.mask),
            "sheaf": self.sheaf_kind,
            "degrees": [],
        }
        for i, pcs in enumerate(self.degrees):
            entry = {"degree": i, "pieces": [p.to_json() for p in pcs]}
            if self.groups is not None:
                entry["group"] = self.group(i).to_json()
            entry["rendered"] = self.render(i)
            out["degrees"].append(entry)
        return out

    def pretty(self) -> str:
        lines = [f"open: {{{', '.join(self.space.poset.members(self.mask))}}}  sheaf: {self.sheaf_kind}"]
        for i, pcs in enumerate(self.degrees):
            detail = "; ".join(str(p) for p in pcs) or "0"
            lines.append(f"H^{i} = {self.render(i)}    [{detail}]")
        return "\n".join(lines)


def _class_of_place(label: str, universe) -> str | None:
    if label.startswith("place:"):
        return label.split(":", 1)[1]
    if label == "infinity":
        return universe.infinity
    return None


def render_pieces(pieces, space: RingedFiniteSpace) -> str:
    """Name a graded group as a pole ring or a quotient of ``k(x)`` when it is one."""
    if not pieces:
        return "0"
    if not space.is_rational:
        return " + ".join(str(p) for p in pieces)
    universe = space.universe
    labels = {p.pattern for p in pieces}
    simple = all(p.dim == 1 and (p.multiplicity is OMEGA or p.pattern == "constant") for p in pieces)
    all_classes = {f"place:{p.name}" for p in universe.finite_places} | {"unlisted"}
    if universe.infinity:
        all_classes.add("infinity")
    if simple and labels <= all_classes | {"constant"}:
        if "constant" in labels and "unlisted" not in labels:
            names = frozenset(_class_of_place(l, universe) for l in labels if l != "constant")
            return ring_name(PoleSet(names), universe)
        if "constant" in labels and "unlisted" in labels and labels == all_classes | {"constant"}:
            return "k(x)"
        if "constant" not in labels and "unlisted" in labels:
            missing = frozenset(_class_of_place(l, universe) for l in all_classes - labels)
            return "k(x)/" + ring_name(PoleSet(missing), universe)
    parts = []
    for p in pieces:
        mult = "" if p.multiplicity == 1 else f"^({p.multiplicity!r})"
        parts.append(f"{p.pattern}:{p.dim}{mult}")
    return " + ".join(parts)


def structure_classes(space: RingedFiniteSpace, mask: int, poles=None) -> list[tuple[str, int, object]]:
    """``(label, V, multiplicity)`` in report order for the structure sheaf."""
    poles = poles or (lambda t: space.poles[t])
    universe = space.universe
    members = bits(mask)

    def support(pred) -> int:
        m = 0
        for t in members:
            if pred(poles(t)):
                m |= 1 << t
        return m

    out = []
    for place in universe.finite_places:
        out.append((f"place:{place.name}", support(lambda s, n=place.name: s.contains(n)), OMEGA))
    out.append(("unlisted", support(lambda s: s.is_all), OMEGA))
    if universe.infinity:
        out.append(("infinity", support(lambda s: s.contains(universe.infinity)), OMEGA))
    out.append(("constant", mask, 1))
    return out


def _fmt_bound(v) -> str:
    return str(v)


def laurent_intervals(breaks: list[int]) -> list[tuple[int | None, int | None]]:
    """Maximal integer intervals on which membership patterns are constant."""
    if not breaks:
        return [(None, None)]
    out = [(None, breaks[0] - 1)]
    for k, b in enumerate(breaks):
        out.append((b, b))
        nxt = breaks[k + 1] if k + 1 < len(breaks) else None
        if nxt is None:
            out.append((b + 1, None))
        elif nxt - b > 1:
            out.append((b + 1, nxt - 1))
    return out


def interval_label(lo, hi) -> str:
    if lo is not None and lo == hi:
        return f"laurent:{lo}"
    return f"laurent:{'-inf' if lo is None else lo}..{'inf' if hi is None else hi}"


def interval_size(lo, hi):
    return OMEGA if lo is None or hi is None else hi - lo + 1


def _representative(lo, hi) -> int:
    if lo is None:
        return hi
    return lo


def laurent_support(space: RingedFiniteSpace, line: FracLine, mask: int, d: int, poles=None) -> int:
    poles = poles or (lambda t: line.poles[t])
    m = 0
    for t in bits(mask):
        lo, hi = laurent_range(line.exps[t], poles(t), space.universe)
        if (lo is None or lo <= d) and (hi is None or d <= hi):
            m |= 1 << t
    return m


def fracmono_classes(space: RingedFiniteSpace, line: FracLine, mask: int, poles=None, extra_breaks=()):
    """``(label, V, multiplicity, representative)`` for one fractional line."""
    poles = poles or (lambda t: line.poles[t])
    breaks = sorted({line.exps[t] for t in bits(mask)} | set(extra_breaks))
    out = []
    for lo, hi in laurent_intervals(breaks):
        rep = _representative(lo, hi) if (lo, hi) != (None, None) else 0
        v = laurent_support(space, line, mask, rep, poles)
        out.append((interval_label(lo, hi), v, interval_size(lo, hi), ("laurent", rep)))
    for cls in polar_classes(space.universe):
        v = 0
        for t in bits(mask):
            if has_class(poles(t), cls):
                v |= 1 << t
        out.append((cls, v, OMEGA, ("polar", cls)))
    return out


def sheaf_cohomology(space: RingedFiniteSpace, mask: int | None = None, sheaf=None, mode: str = "exact", window: int = 20):
    """``H^i(U, F)`` for ``0 <= i <= dim U`` (exact) or a window oracle report."""
    poset = space.poset
    mask = poset.full if mask is None else mask
    sheaf = sheaf if sheaf is not None else StructureSheaf()
    if not poset.is_open(mask):
        raise InputError(f"{poset.members(mask)} is not open")
    if mode == "window":
        from .window import window_cohomology

        return window_cohomology(space, mask, sheaf, window)
    if mode != "exact":
        raise InputError(f"unknown mode {mode!r}")
    top = poset.dimension(mask)
    nd = top + 1
    if not space.is_rational:
        ab = _abelian_version(space, sheaf)
        cx = abelian_complex(space, ab, mask)
        groups = presented_groups(cx.presented, nd)
        degrees = tuple(
            ((Piece("module", g.rank, 1, tuple(g.torsion)),) if not g.is_zero else ()) for g in groups
        )
        return CohomologyReport(space, mask, sheaf.kind, degrees, tuple(groups))
    ring = space.ring
    degrees = [[] for _ in range(nd)]
    if isinstance(sheaf, StructureSheaf):
        for label, v, mult in structure_classes(space, mask):
            for i, d in enumerate(pattern_cohomology(poset, mask, v, ring)):
                if d:
                    degrees[i].append(Piece(label, d, mult))
    elif isinstance(sheaf, PatternSheaf):
        for i, d in enumerate(pattern_cohomology(poset, mask, sheaf.support & mask, ring)):
            if d:
                degrees[i].append(Piece("support", d, 1))
    elif isinstance(sheaf, FracMonoSheaf):
        many = len(sheaf.summands) > 1
        for k, line in enumerate(sheaf.summands):
            prefix = f"summand{k}/" if many else ""
            for label, v, mult, _ in fracmono_classes(space, line, mask):
                for i, d in enumerate(pattern_cohomology(poset, mask, v, ring)):
                    if d:
                        degrees[i].append(Piece(prefix + label, d, mult))
    else:
        raise UnsupportedError(f"exact cohomology of {type(sheaf).__name__} in the rational universe")
    return CohomologyReport(space, mask, sheaf.kind, tuple(tuple(d) for d in degrees))


def presented_groups(cx: PresentedComplex, nd: int) -> list[AbelianGroup]:
    groups = [g for g, _, _ in _presented_pieces(cx)] if cx.gens else []
    groups = groups[:nd] + [AbelianGroup(0)] * (nd - len(groups))
    return groups


def is_acyclic(space: RingedFiniteSpace, mask: int | None = None, sheaf=None) -> bool:
    return sheaf_cohomology(space, mask, sheaf).acyclic


# ---------------------------------------------------------------------------
# pattern maps and base change


@dataclass(frozen=True)
class ClassMap:
    label: str
    source_dim: int
    target_dim: int
    rank: int | None

    @property
    def iso(self) -> bool:
        return self.source_dim == self.target_dim and (self.source_dim == 0 or self.rank == self.source_dim)

    def to_json(self) -> dict:
        return {"class": self.label, "source": self.source_dim, "target": self.target_dim, "rank": self.rank}


def pattern_map(
    poset: FinitePoset, umask: int, vl: int, umask2: int, vr: int, degree: int, ring: Ring = QQ, label: str = ""
) -> ClassMap:
    """Rank of ``H^i(U, k_{V_L}) -> H^i(U', k_{V_R})`` induced by restricting chains.

    Uses ``rank H(φ) = rank Θ - rank d_L^i - rank d_R^{i-1}`` with
    ``Θ(l, r) = (φ l + d_R r, d_L l)`` on ``L^i ⊕ R^{i-1}``.
    """
    if vl & umask2 != vr:
        raise ValueError("target pattern must be the restriction of the source pattern")
    hl = _at(pattern_cohomology(poset, umask, vl, ring), degree)
    hr = _at(pattern_cohomology(poset, umask2, vr, ring), degree)
    if hl != hr:
        return ClassMap(label, hl, hr, None)
    if hl == 0:
        return ClassMap(label, 0, 0, 0)
    L = pattern_complex(poset, umask, vl)
    R = pattern_complex(poset, umask2, vr)
    li, ri, ri_1, li1 = L.dim(degree), R.dim(degree), R.dim(degree - 1), L.dim(degree + 1)
    phi = zeros(ri, li)
    if degree < len(R.chains):
        for c, r in R.index[degree].items():
            phi[r][L.index[degree][c]] = 1
    d_r = R.d(degree - 1) if degree >= 1 else zeros(ri, 0)
    d_l = L.d(degree)
    theta = []
    for r in range(ri):
        theta.append(list(phi[r]) + (list(d_r[r]) if ri_1 else []))
    for r in range(li1):
        theta.append(list(d_l[r]) + [0] * ri_1)
    rk_theta = rank(theta, ring) if theta and li + ri_1 else 0
    rk_dl = rank(d_l, ring) if li and li1 else 0
    rk_dr = rank(d_r, ring) if ri and ri_1 else 0
    return ClassMap(label, hl, hr, rk_theta - rk_dl - rk_dr)


def _at(values, i):
    return values[i] if 0 <= i < len(values) else 0


@dataclass(frozen=True)
class BaseChange:
    holds: bool
    classes: tuple[ClassMap, ...] = ()
    note: str = ""

    def to_json(self) -> dict:
        out = {"holds": self.holds, "classes": [c.to_json() for c in self.classes]}
        if self.note:
            out["note"] = self.note
        return out


def _class_name(label: str, universe) -> str | None:
    if label == "unlisted":
        return None
    return _class_of_place(label, universe)


def _class_in(label: str, poles: PoleSet, universe) -> bool:
    if label == "unlisted":
        return poles.is_all
    if label == "constant":
        return True
    return poles.contains(_class_of_place(label, universe))


def base_change(
    space: RingedFiniteSpace,
    sheaf,
    base: PoleSet | None,
    target: PoleSet | None,
    umask: int,
    umask2: int,
    degree: int,
) -> BaseChange:
    """Is ``H^i(U, F) ⊗_{R_base} R_target -> H^i(U', F)`` an isomorphism?

    Requires ``U' ⊆ U``, ``base ⊆ T_t`` on ``U`` and ``target ⊆ T_t`` on ``U'``.
    In the topological universe the rings are all equal and the map is the
    plain restriction.
    """
    poset = space.poset
    if umask2 & ~umask:
        raise ValueError("U' must lie inside U")
    sheaf = sheaf if sheaf is not None else StructureSheaf()
    if not space.is_rational:
        ab = _abelian_version(space, sheaf)
        src = abelian_complex(space, ab, umask)
        dst = abelian_complex(space, ab, umask2)
        chain_map = projection_map(src, dst, ab)
        ok = _induced_iso(src, dst, chain_map, degree)
        return BaseChange(ok)
    universe, ring = space.universe, space.ring
    if isinstance(sheaf, PatternSheaf):
        raise InputError("a pattern sheaf is not an O-module in the rational universe")
    localize_trivially = base.is_empty and not target.is_empty
    if isinstance(sheaf, StructureSheaf):
        if localize_trivially:
            return _base_change_from_field(space, target, umask, umask2, degree)
        maps = []
        left = structure_classes(space, umask, lambda t: space.poles[t].union(target))
        right = {label: v for label, v, _ in structure_classes(space, umask2)}
        for label, vl, _ in left:
            maps.append(pattern_map(poset, umask, vl, umask2, right[label], degree, ring, label))
        return BaseChange(all(m.iso for m in maps), tuple(maps))
    if isinstance(sheaf, FracMonoSheaf):
        if localize_trivially:
            raise UnsupportedError("base change of a fractional module from a stalk equal to k")
        maps = []
        many = len(sheaf.summands) > 1
        for k, line in enumerate(sheaf.summands):
            prefix = f"summand{k}/" if many else ""
            local = []
            for t in range(len(space)):
                s = line.poles[t].union(target) if umask >> t & 1 else line.poles[t]
                if umask >> t & 1 and not in_family(line.exps[t], s, universe):
                    raise UnrepresentableError(f"localized stalk at {space.points[t]} leaves the supported family")
                local.append(s)
            left = fracmono_classes(space, line, umask, lambda t: local[t])
            for label, vl, _, rep in left:
                if rep[0] == "laurent":
                    vr = laurent_support(space, line, umask2, rep[1])
                else:
                    vr = 0
                    for t in bits(umask2):
                        if has_class(line.poles[t], rep[1]):
                            vr |= 1 << t
                maps.append(pattern_map(poset, umask, vl, umask2, vr, degree, ring, prefix + label))
        return BaseChange(all(m.iso for m in maps), tuple(maps))
    raise UnsupportedError(f"base change for {type(sheaf).__name__}")


def _base_change_from_field(space: RingedFiniteSpace, target: PoleSet, umask: int, umask2: int, degree: int) -> BaseChange:
    """``H^i(U, O) ⊗_k R_target -> H^i(U', O)``.

    This is an isomorphism iff ``H^i(U, O)`` is concentrated in the constant
    class, the constant classes match under restriction, and ``H^i(U', O)``
    has no nonconstant class outside ``target`` (classes inside ``target``
    have the same pattern ``U'`` as the constant class).
    """
    poset, ring, universe = space.poset, space.ring, space.universe
    maps = []
    for label, v, _ in structure_classes(space, umask):
        if label == "constant":
            continue
        d = _at(pattern_cohomology(poset, umask, v, ring), degree)
        if d:
            return BaseChange(False, (ClassMap(label, d, 0, None),), "source has a nonconstant class")
    const = pattern_map(poset, umask, umask, umask2, umask2, degree, ring, "constant")
    maps.append(const)
    if not const.iso:
        return BaseChange(False, tuple(maps), "constant classes differ")
    for label, v, _ in structure_classes(space, umask2):
        if label == "constant" or _class_in(label, target, universe):
            continue
        d = _at(pattern_cohomology(poset, umask2, v, ring), degree)
        if d:
            maps.append(ClassMap(label, 0, d, None))
            return BaseChange(False, tuple(maps), "target has a class outside the base change")
    return BaseChange(True, tuple(maps))


def _induced_iso(src: AbelianComplex, dst: AbelianComplex, chain_map, degree: int) -> bool:
    s_groups = presented_groups(src.presented, degree + 1)
    d_groups = presented_groups(dst.presented, degree + 1)
    if s_groups[degree].is_zero and d_groups[degree].is_zero:
        return True
    if s_groups[degree] != d_groups[degree]:
        return False
    return induced_map_is_iso(src.presented, dst.presented, chain_map, degree)


# ---------------------------------------------------------------------------
# sections and direct images


@dataclass(frozen=True)
class SectionsPresentation:
    """``H^0(W, F)`` as ``R^ngens / relations`` with a cocycle basis in ``C^0(W)``."""

    mask: int
    ngens: int
    relations: Matrix
    basis: Matrix
    offsets: dict
    stalk_gens: tuple

    def restrict_to(self, other: "SectionsPresentation", ring: Ring) -> Matrix:
        if other.ngens == 0:
            return []
        if self.ngens == 0:
            return [[] for _ in range(other.ngens)]
        rows = sum(other.stalk_gens[t] for t in bits(other.mask))
        image = zeros(rows, self.ngens)
        for (t,), off in other.offsets.items():
            src = self.offsets[(t,)]
            for j in range(other.stalk_gens[t]):
                image[off + j] = list(self.basis[src + j])
        phi = solve_in_basis(other.basis, image, rows, ring)
        if phi is None:
            raise AssertionError("restricted sections are not cocycles")
        return phi


def sections_presentation(space: RingedFiniteSpace, sheaf: AbelianSheaf, mask: int) -> SectionsPresentation:
    if mask == 0:
        return SectionsPresentation(0, 0, [], [], {}, sheaf.gens)
    cx = abelian_complex(space, sheaf, mask)
    group, basis, coords = _presented_pieces(cx.presented)[0]
    n = ncols(basis)
    rel = coords if coords and ncols(coords) else [[] for _ in range(n)]
    return SectionsPresentation(mask, n, rel, basis, cx.offsets[0], sheaf.gens)


@dataclass(frozen=True, eq=False)
class DirectImage:
    degree: int
    stalks: tuple[CohomologyReport, ...]
    edges: tuple[tuple[str, str, BaseChange], ...]

    @property
    def quasi_coherent(self) -> bool:
        return all(bc.holds for _, _, bc in self.edges)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "stalks": [r.to_json() for r in self.stalks],
            "edges": [{"from": a, "to": b, **bc.to_json()} for a, b, bc in self.edges],
            "quasi_coherent": self.quasi_coherent,
        }


def higher_direct_image(f: MorphismDescriptor, sheaf, degree: int, paranoid: bool = False) -> DirectImage:
    """``[R^i f_* F]_y = H^i(f^{-1}(U_y), F)`` with a base-change verdict per edge."""
    src, tgt = f.source, f.target
    sheaf = sheaf if sheaf is not None else StructureSheaf()
    stalks = []
    for y in range(len(tgt)):
        pre = f.preimage(tgt.poset.up[y])
        report = sheaf_cohomology(src, pre, sheaf)
        stalks.append(_single_degree(report, degree))
    edges = []
    pairs = tgt.poset.strict_pairs if paranoid else tgt.poset.hasse
    for y, y2 in pairs:
        u, u2 = f.preimage(tgt.poset.up[y]), f.preimage(tgt.poset.up[y2])
        if degree > src.poset.dimension(u) and degree > src.poset.dimension(u2):
            bc = BaseChange(True)
        else:
            base = tgt.poles[y] if tgt.is_rational else None
            target = tgt.poles[y2] if tgt.is_rational else None
            bc = base_change(src, sheaf, base, target, u, u2, degree)
        edges.append((tgt.points[y], tgt.points[y2], bc))
    return DirectImage(degree, tuple(stalks), tuple(edges))


def _single_degree(report: CohomologyReport, degree: int) -> CohomologyReport:
    pieces = report.pieces(degree)
    groups = None
    if report.groups is not None:
        groups = (report.group(degree),)
    return CohomologyReport(report.space, report.mask, report.sheaf_kind, (pieces,), groups)


# ---------------------------------------------------------------------------
# order complex


def order_complex_homology(poset: FinitePoset, mask: int | None = None, ring: Ring = ZZ, reduced: bool = False) -> list[AbelianGroup]:
    """Simplicial homology of the chains of ``mask`` (the order complex)."""
    mask = poset.full if mask is None else mask
    levels = poset.all_chains(mask)
    if not levels:
        return [AbelianGroup(0)]
    index = [{c: k for k, c in enumerate(level)} for level in levels]
    top = len(levels) - 1
    boundaries = {}
    for n in range(1, top + 1):
        mat = zeros(len(levels[n - 1]), len(levels[n]))
        for col, chain in enumerate(levels[n]):
            for i in range(len(chain)):
                face = chain[:i] + chain[i + 1:]
                mat[index[n - 1][face]][col] += -1 if i % 2 else 1
        boundaries[n] = mat
    dims = [len(level) for level in levels]
    if reduced:
        boundaries[0] = [[1] * dims[0]]
    # reverse the grading: homological degree n sits at cohomological degree top - n
    terms = [dims[n] for n in range(top, -1, -1)]
    diffs = [boundaries[n] for n in range(top, 0, -1)]
    if reduced:
        terms.append(1)
        diffs.append(boundaries[0])
    groups = complex_homology(diffs, ring, terms)
    out = [groups[top - n] for n in range(top + 1)]
    return out
