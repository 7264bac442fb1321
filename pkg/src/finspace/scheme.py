"""Chart-and-gluing descriptors, covering models and refinements."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cohomology import sheaf_cohomology
from .poset import FinitePoset, PosetError, bits, quotient_by_covering
from .predicates import Obligation, PredicateVerdict, is_affine, is_affine_morphism
from .rational import ALL, PoleSet, RationalUniverse
from .sheaves import UnrepresentableError
from .space import InputError, MorphismDescriptor, RingedFiniteSpace, format_poles, ring_name

OPEN = "open-immersion"
NOT_OPEN = "flat-mono-not-open"
NOT_MONO = "not-monomorphism"


def classify_gluing(lower: PoleSet, upper: PoleSet) -> tuple[str, PoleSet]:
    """Kind of ``Spec R_upper -> Spec R_lower`` for ``lower ⊆ upper``, with the removed places."""
    if lower == upper:
        return OPEN, PoleSet()
    if lower.is_empty:
        # k -> R_T is not an epimorphism of rings
        return NOT_MONO, upper
    if upper.is_all:
        return NOT_OPEN, upper
    return OPEN, upper.difference(lower)


def _ring_json(poles: PoleSet, universe: RationalUniverse) -> dict:
    return {"poles": poles.to_json(universe.names), "name": ring_name(poles, universe)}


def _require_rational(space: RingedFiniteSpace) -> None:
    if not space.is_rational:
        raise InputError("Spec descriptors need the rational universe")


def has_open_restrictions(space: RingedFiniteSpace) -> PredicateVerdict:
    _require_rational(space)
    verdict = PredicateVerdict("open restrictions")
    for a, b in space.poset.hasse:
        kind, removed = classify_gluing(space.poles[a], space.poles[b])
        label = f"edge {space.points[a]}<{space.points[b]}: {kind}"
        evidence = {"class": kind, "removed": removed.to_json(space.universe.names)}
        if not verdict.add(Obligation("gluing", label, kind == OPEN, evidence)):
            break
    return verdict


@dataclass(frozen=True)
class Gluing:
    source: str
    target: str
    kind: str
    removed: PoleSet


@dataclass(frozen=True, eq=False)
class SchemeDescriptor:
    space: RingedFiniteSpace
    gluings: tuple[Gluing, ...]
    is_scheme: bool
    global_sections: tuple[PoleSet, ...]
    affine: bool
    open_restrictions: PredicateVerdict = field(repr=False)

    @property
    def kind(self) -> str:
        return "scheme" if self.is_scheme else "locally ringed space"

    def to_json(self) -> dict:
        universe = self.space.universe
        names = universe.names
        if len(self.global_sections) == 1:
            sections = _ring_json(self.global_sections[0], universe)
        else:
            sections = {"product": [_ring_json(p, universe) for p in self.global_sections]}
        return {
            "charts": [
                {"point": p, "ring": _ring_json(self.space.poles[i], universe)} for i, p in enumerate(self.space.points)
            ],
            "gluings": [
                {"from": g.source, "to": g.target, "class": g.kind, "removed": g.removed.to_json(names)}
                for g in self.gluings
            ],
            "is_scheme": self.is_scheme,
            "kind": self.kind,
            "global_sections": sections,
            "affine_collapse": {"ring": sections, "equivalent": True} if self.affine else None,
        }

    def pretty(self) -> str:
        universe = self.space.universe
        lines = [f"Spec descriptor: {self.kind}"]
        for i, p in enumerate(self.space.points):
            lines.append(f"  chart {p}: Spec {ring_name(self.space.poles[i], universe)}")
        for g in self.gluings:
            extra = f" removing {format_poles(g.removed, universe)}" if g.kind == OPEN and not g.removed.is_empty else ""
            lines.append(f"  {g.source} -> {g.target}: {g.kind}{extra}")
        rings = " x ".join(ring_name(p, universe) for p in self.global_sections)
        lines.append(f"  global sections: {rings}")
        if self.affine:
            lines.append(f"  affine: collapses to Spec {rings}")
        return "\n".join(lines)


def _sections_from_degree_zero(space: RingedFiniteSpace, mask: int) -> PoleSet:
    """Read the pole ring off the graded ``H^0`` of a connected open."""
    names = set()
    everything = False
    for piece in sheaf_cohomology(space, mask).pieces(0):
        if not piece.dim or piece.pattern == "constant":
            continue
        if piece.pattern == "unlisted":
            everything = True
        elif piece.pattern == "infinity":
            names.add(space.universe.infinity)
        else:
            names.add(piece.pattern.split(":", 1)[1])
    return ALL if everything else PoleSet(frozenset(names))


def spec_export(space: RingedFiniteSpace, paranoid: bool = False) -> SchemeDescriptor:
    _require_rational(space)
    poset = space.poset
    gluings = []
    removed = {}
    for a, b in poset.strict_pairs:
        kind, gone = classify_gluing(space.poles[a], space.poles[b])
        gluings.append(Gluing(space.points[b], space.points[a], kind, gone))
        removed[a, b] = (kind, gone)
    for (a, b), (kind, gone) in removed.items():
        if kind != OPEN:
            continue
        for c in bits(poset.up[b] & ~(1 << b)):
            k2, g2 = removed[b, c]
            k3, g3 = removed[a, c]
            if k2 == OPEN and (k3 != OPEN or g3 != gone.union(g2)):
                raise AssertionError(f"gluings along {space.points[a]}<{space.points[b]}<{space.points[c]} do not compose")
    sections = []
    for comp in poset.connected_components(poset.full):
        ring = space.common_poles(comp)
        seen = _sections_from_degree_zero(space, comp)
        if seen != ring:
            raise AssertionError(f"global sections {format_poles(ring)} disagree with H^0 ({format_poles(seen)})")
        sections.append(ring)
    opens = has_open_restrictions(space)
    return SchemeDescriptor(
        space,
        tuple(gluings),
        opens.verdict is True,
        tuple(sections),
        is_affine(space, paranoid).verdict is True,
        opens,
    )


# ---------------------------------------------------------------------------
# covering models


@dataclass(frozen=True, eq=False)
class CoveringModel:
    """Finite model ``X`` of a covering together with the projection ``S -> X``."""

    carrier: RingedFiniteSpace
    cover: tuple[int, ...]
    space: RingedFiniteSpace
    projection: MorphismDescriptor

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "projection": self.projection.as_dict(),
            "cover": [self.carrier.poset.members(m) for m in self.cover],
        }


def _cover_masks(carrier: RingedFiniteSpace, cover) -> tuple[int, ...]:
    masks = []
    for member in cover:
        if isinstance(member, int):
            m = member
        else:
            try:
                m = carrier.poset.mask_of(list(member))
            except PosetError as exc:
                raise InputError(str(exc), where="covering") from None
        if not carrier.poset.is_open(m):
            raise InputError(f"cover member {carrier.poset.members(m)} is not open", where="covering")
        masks.append(m)
    if not masks:
        raise InputError("empty covering")
    return tuple(masks)


def covering_model(carrier: RingedFiniteSpace, cover) -> CoveringModel:
    """Quotient of ``carrier`` by a finite open covering, with ``O_[s] = O(U^s)``."""
    masks = _cover_masks(carrier, cover)
    try:
        poset, rep = quotient_by_covering(carrier.poset, [carrier.poset.members(m) for m in masks])
    except PosetError as exc:
        raise InputError(str(exc), where="covering") from None
    star = {}
    for s in range(len(carrier)):
        u = carrier.poset.full
        for m in masks:
            if m >> s & 1:
                u &= m
        star[s] = u
    rings = []
    for label in poset.points:
        u = star[carrier.poset.idx(label)]
        if len(carrier.poset.connected_components(u)) != 1:
            raise UnrepresentableError(f"sections over U^{label} split into several components")
        if carrier.is_rational:
            rings.append(carrier.common_poles(u))
    if carrier.is_rational:
        space = RingedFiniteSpace(poset, carrier.universe, tuple(rings))
    else:
        space = RingedFiniteSpace(poset, carrier.universe)
    mapping = tuple(poset.idx(rep[s]) for s in carrier.points)
    return CoveringModel(carrier, masks, space, MorphismDescriptor(carrier, space, mapping))


def is_thinner(carrier: RingedFiniteSpace, fine, coarse) -> bool:
    """``U'^s ⊆ U^s`` for every point ``s`` of the carrier."""
    fine, coarse = _cover_masks(carrier, fine), _cover_masks(carrier, coarse)
    for s in range(len(carrier)):
        a = b = carrier.poset.full
        for m in fine:
            if m >> s & 1:
                a &= m
        for m in coarse:
            if m >> s & 1:
                b &= m
        if a & ~b:
            return False
    return True


def refinement_morphism(carrier: RingedFiniteSpace, fine, coarse) -> tuple[CoveringModel, CoveringModel, MorphismDescriptor]:
    """The map ``f: X' -> X`` with ``f ∘ π' = π`` for a thinner covering."""
    if not is_thinner(carrier, fine, coarse):
        raise InputError("the first covering is not thinner than the second")
    x_fine, x_coarse = covering_model(carrier, fine), covering_model(carrier, coarse)
    mapping = [None] * len(x_fine.space)
    for s in range(len(carrier)):
        mapping[x_fine.projection.mapping[s]] = x_coarse.projection.mapping[s]
    f = MorphismDescriptor(x_fine.space, x_coarse.space, tuple(mapping))
    return x_fine, x_coarse, f


def line_carrier(universe: RationalUniverse, opens: list[PoleSet], generic: str = "generic") -> tuple[RingedFiniteSpace, list[int]]:
    """Coarse carrier for a covering of an open of the projective line by ``P^1 ∖ T_i``.

    Points are the declared places outside ``∩ T_i`` plus one generic point
    standing for every other place, placed above them.  The carrier stalks are
    placeholders; ``line_model`` assigns the actual section rings.
    """
    if not opens:
        raise InputError("empty covering")
    for t in opens:
        if t.is_all or t.is_empty:
            raise InputError("covering members must remove a finite nonempty set of places")
    common = opens[0]
    for t in opens[1:]:
        common = common.intersection(t)
    names = [n for n in universe.names if not common.contains(n)]
    if generic in universe.names:
        raise InputError(f"place name {generic!r} clashes with the generic point")
    points = names + [generic]
    relations = [(n, generic) for n in names]
    poset = FinitePoset.from_relations(points, relations)
    stalks = []
    for p in poset.points:
        stalks.append(ALL if p == generic else common)
    carrier = RingedFiniteSpace(poset, universe, tuple(stalks))
    cover = []
    for t in opens:
        cover.append(poset.mask_of([p for p in poset.points if p == generic or not t.contains(p)]))
    return carrier, cover


def line_model(universe: RationalUniverse, opens: list[PoleSet]) -> RingedFiniteSpace:
    """Finite space of the covering ``{P^1 ∖ T_i}`` with ``O_[s] = R_{∪ T_i : s ∉ T_i}``."""
    carrier, cover = line_carrier(universe, opens)
    model = covering_model(carrier, cover)
    poles = []
    for label in model.space.points:
        s = carrier.poset.idx(label)
        acc = PoleSet()
        for t, m in zip(opens, cover):
            if m >> s & 1:
                acc = acc.union(t)
        poles.append(acc)
    return RingedFiniteSpace(model.space.poset, universe, tuple(poles))


def line_refinement(universe: RationalUniverse, fine: list[PoleSet], coarse: list[PoleSet]) -> MorphismDescriptor:
    """``X' -> X`` for two coverings of the same open ``P^1 ∖ ∩T_i``."""
    def common(opens):
        acc = opens[0]
        for t in opens[1:]:
            acc = acc.intersection(t)
        return acc

    if common(fine) != common(coarse):
        raise InputError("the coverings cover different opens")
    carrier, fine_masks = line_carrier(universe, fine)
    _, coarse_masks = line_carrier(universe, coarse)
    if not is_thinner(carrier, fine_masks, coarse_masks):
        raise InputError("the first covering is not thinner than the second")
    x_fine, x_coarse = line_model(universe, fine), line_model(universe, coarse)
    m_fine = covering_model(carrier, fine_masks).projection
    m_coarse = covering_model(carrier, coarse_masks).projection
    mapping = [None] * len(x_fine)
    for s in range(len(carrier)):
        mapping[m_fine.mapping[s]] = m_coarse.mapping[s]
    return MorphismDescriptor(x_fine, x_coarse, tuple(mapping))


# ---------------------------------------------------------------------------
# refinement witness


@dataclass(frozen=True, eq=False)
class RefinementWitness:
    morphism: MorphismDescriptor
    patches: tuple[dict, ...]
    source: SchemeDescriptor
    target: SchemeDescriptor

    def to_json(self) -> dict:
        return {
            "map": self.morphism.as_dict(),
            "patches": list(self.patches),
            "global_sections_agree": self.source.global_sections == self.target.global_sections,
        }


def refinement_equivalence(f: MorphismDescriptor, paranoid: bool = False) -> RefinementWitness:
    """Identify each glued patch over ``f^{-1}(U_y)`` with the chart ``Spec O_y``."""
    src, tgt = f.source, f.target
    _require_rational(src)
    weak = is_affine_morphism(f, "weak_equivalence", paranoid)
    if weak.verdict is not True:
        where = weak.counterexample.label if weak.counterexample else "unknown"
        raise InputError("not a weak equivalence", where=where)
    universe = src.universe
    patches = []
    for y in range(len(tgt)):
        pre = f.preimage(tgt.poset.up[y])
        members = list(bits(pre))
        common = src.common_poles(pre)
        collapse = is_affine(src.subspace(pre), paranoid).verdict is True
        # closed points of Spec O_y are the places outside T_y; each chart sees the places outside T_x
        uncovered = tgt.poles[y]
        for x in members:
            uncovered = uncovered.intersection(src.poles[x])
        charts = []
        for x in members:
            kind, removed = classify_gluing(tgt.poles[y], src.poles[x])
            charts.append({"point": src.points[x], "ring": _ring_json(src.poles[x], universe), "into_target": kind})
        patch = {
            "point": tgt.points[y],
            "ring": _ring_json(tgt.poles[y], universe),
            "charts": charts,
            "sections": _ring_json(common, universe),
            "affine_collapse": collapse,
            "covers": uncovered == tgt.poles[y],
        }
        if not (collapse and common == tgt.poles[y] and patch["covers"]):
            raise AssertionError(f"patch over {tgt.points[y]} does not collapse to its chart")
        patches.append(patch)
    left, right = spec_export(src, paranoid), spec_export(tgt, paranoid)
    if left.global_sections != right.global_sections:
        raise AssertionError("global sections differ across a weak equivalence")
    return RefinementWitness(f, tuple(patches), left, right)
