"""Structural predicates and constructions on ringed finite spaces."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .cohomology import BaseChange, base_change, order_complex_homology, sheaf_cohomology
from .poset import FinitePoset, bits, core_reduction, pair_label
from .rational import EMPTY, PoleSet
from .sheaves import StructureSheaf, UnrepresentableError
from .space import InputError, MorphismDescriptor, RingedFiniteSpace, format_poles

UNKNOWN = "unknown"


@dataclass(frozen=True)
class Obligation:
    kind: str
    label: str
    holds: bool | None
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "label": self.label, "holds": _verdict_json(self.holds), "evidence": self.evidence}


def _verdict_json(v):
    return UNKNOWN if v is None else v


@dataclass
class PredicateVerdict:
    """``verdict`` is True, False or None (unknown); obligations in checking order."""

    predicate: str
    verdict: bool | None = True
    obligations: list[Obligation] = field(default_factory=list)
    counterexample: Obligation | None = None

    def add(self, ob: Obligation) -> bool:
        """Record an obligation; returns False once the verdict is settled as false."""
        self.obligations.append(ob)
        if ob.holds is False:
            self.verdict = False
            self.counterexample = self.counterexample or ob
            return False
        if ob.holds is None and self.verdict is True:
            self.verdict = None
        return True

    def to_json(self, certificate: bool = False) -> dict:
        out = {
            "predicate": self.predicate,
            "verdict": _verdict_json(self.verdict),
            "obligations": len(self.obligations),
            "counterexample": self.counterexample.to_json() if self.counterexample else None,
        }
        if certificate:
            out["certificate"] = [o.to_json() for o in self.obligations]
        return out

    def pretty(self) -> str:
        shown = str(_verdict_json(self.verdict)).lower()
        count = len(self.obligations)
        lines = [f"{self.predicate}: {shown}  ({count} obligation{'s' if count != 1 else ''} checked)"]
        if self.counterexample:
            lines.append(f"fails: {self.counterexample.label}")
        return "\n".join(lines)


def _bc_evidence(bc: BaseChange) -> dict:
    return bc.to_json()


def _name(space: RingedFiniteSpace, i: int) -> str:
    return space.points[i]


# ---------------------------------------------------------------------------
# schematic


def _schematic_obligations(space: RingedFiniteSpace, verdict: PredicateVerdict, paranoid: bool, degrees, acyclic: bool) -> None:
    poset = space.poset
    n = len(space)
    edges = poset.strict_pairs if paranoid else poset.hasse
    for p in range(n):
        for q in range(n):
            u = poset.up[p] & poset.up[q]
            if not u:
                continue
            pair = f"({_name(space, p)},{_name(space, q)})"
            if acyclic:
                report = sheaf_cohomology(space, u)
                ok = report.acyclic
                if not verdict.add(Obligation("acyclic", f"U{pair} acyclic", ok, {"open": poset.members(u)})):
                    return
            for a, b in edges:
                if a != p:
                    continue
                u2 = poset.up[b] & poset.up[q]
                top = poset.dimension(u)
                for i in degrees:
                    if i > top:
                        break
                    base = space.poles[p] if space.is_rational else None
                    target = space.poles[b] if space.is_rational else None
                    bc = base_change(space, StructureSheaf(), base, target, u, u2, i)
                    label = f"pair {pair}, edge {_name(space, p)}<{_name(space, b)}, degree {i}"
                    if not verdict.add(Obligation("base-change", label, bc.holds, _bc_evidence(bc))):
                        return


def is_schematic(space: RingedFiniteSpace, paranoid: bool = False) -> PredicateVerdict:
    """Base change ``H^i(U_pq, O) ⊗ O_p' -> H^i(U_p'q, O)`` is an isomorphism everywhere.

    In the topological universe the fast path checks that every connected
    component has a maximum; ``paranoid`` runs the cohomological obligations
    over all pairs ``p < p'`` instead.
    """
    verdict = PredicateVerdict("schematic")
    if not space.is_rational and not paranoid:
        for comp in space.poset.connected_components(space.poset.full):
            top = space.poset.maximum(comp)
            label = f"component {{{', '.join(space.poset.members(comp))}}} has a maximum"
            if not verdict.add(Obligation("irreducible", label, top is not None)):
                break
        return verdict
    _schematic_obligations(space, verdict, paranoid, range(space.dimension + 1), acyclic=False)
    return verdict


def is_semi_separated(space: RingedFiniteSpace, paranoid: bool = False) -> PredicateVerdict:
    verdict = PredicateVerdict("semi-separated")
    _schematic_obligations(space, verdict, paranoid, (0,), acyclic=True)
    return verdict


# ---------------------------------------------------------------------------
# affine


def is_affine(space: RingedFiniteSpace, paranoid: bool = False) -> PredicateVerdict:
    """Decided per connected component."""
    verdict = PredicateVerdict("affine")
    poset = space.poset
    for comp in poset.connected_components(poset.full):
        name = "{" + ", ".join(poset.members(comp)) + "}"
        sub = space.subspace(comp)
        if not _affine_component(sub, name, verdict, paranoid):
            break
    return verdict


def _affine_component(sub: RingedFiniteSpace, name: str, verdict: PredicateVerdict, paranoid: bool) -> bool:
    poset = sub.poset
    if poset.minimum(poset.full) is not None:
        return verdict.add(Obligation("minimum", f"component {name} has a minimum", True))
    if not sub.is_rational:
        core = core_reduction(poset)
        if len(core.poset) == 1:
            return verdict.add(Obligation("core", f"component {name} is homotopically trivial", True))
        homology = order_complex_homology(poset, reduced=True)
        nonzero = [i for i, g in enumerate(homology) if not g.is_zero]
        if nonzero:
            return verdict.add(
                Obligation("homology", f"component {name} has reduced homology in degree {nonzero[0]}", False, {"degrees": nonzero})
            )
        return verdict.add(Obligation("core", f"component {name}: core has {len(core.poset)} points, homology vanishes", None))
    sch = is_schematic(sub, paranoid)
    if not verdict.add(Obligation("schematic", f"component {name} is schematic", sch.verdict, sch.to_json())):
        return False
    report = sheaf_cohomology(sub)
    if not verdict.add(Obligation("acyclic", f"component {name} is acyclic", report.acyclic)):
        return False
    common = sub.common_poles(poset.full)
    if not common.is_empty:
        return verdict.add(
            Obligation("battery", f"component {name}: common poles {format_poles(common, sub.universe)}", True)
        )
    for p in range(len(sub)):
        for q in range(p, len(sub)):
            ok = sub.poles[p].is_empty or sub.poles[q].is_empty
            label = f"component {name}: O_{sub.points[p]} ⊗_A O_{sub.points[q]} over A = k"
            if not verdict.add(Obligation("battery", label, ok)):
                return False
    return True


# ---------------------------------------------------------------------------
# morphisms


def is_schematic_morphism(f: MorphismDescriptor, mode: str = "schematic", paranoid: bool = False) -> PredicateVerdict:
    """Base change over ``U_xy = U_x ∩ f^{-1}(U_y)`` along both generator directions."""
    if mode not in ("schematic", "locally_acyclic"):
        raise ValueError(f"unknown mode {mode!r}")
    src, tgt = f.source, f.target
    verdict = PredicateVerdict("schematic morphism" if mode == "schematic" else "locally acyclic morphism")
    xp, yp = src.poset, tgt.poset
    x_edges = xp.strict_pairs if paranoid else xp.hasse
    y_edges = yp.strict_pairs if paranoid else yp.hasse
    degrees = range(src.dimension + 1)
    rational = src.is_rational
    for x in range(len(src)):
        for y in range(len(tgt)):
            u = xp.up[x] & f.preimage(yp.up[y])
            if not u:
                continue
            tag = f"({src.points[x]},{tgt.points[y]})"
            if mode == "locally_acyclic":
                ok = sheaf_cohomology(src, u).acyclic
                if not verdict.add(Obligation("acyclic", f"U{tag} acyclic", ok)):
                    return verdict
            moves = []
            for a, b in x_edges:
                if a == x:
                    moves.append((f"x-edge {src.points[a]}<{src.points[b]}", xp.up[b] & f.preimage(yp.up[y]),
                                  src.poles[a] if rational else None, src.poles[b] if rational else None))
            for a, b in y_edges:
                if a == y:
                    moves.append((f"y-edge {tgt.points[a]}<{tgt.points[b]}", xp.up[x] & f.preimage(yp.up[b]),
                                  tgt.poles[a] if rational else None, tgt.poles[b] if rational else None))
            top = xp.dimension(u)
            for label, u2, base, target in moves:
                for i in degrees:
                    if i > top:
                        break
                    bc = base_change(src, StructureSheaf(), base, target, u, u2, i)
                    full = f"U{tag}, {label}, degree {i}"
                    if not verdict.add(Obligation("base-change", full, bc.holds, _bc_evidence(bc))):
                        return verdict
    return verdict


def is_affine_morphism(f: MorphismDescriptor, mode: str = "affine", paranoid: bool = False) -> PredicateVerdict:
    if mode not in ("affine", "weak_equivalence"):
        raise ValueError(f"unknown mode {mode!r}")
    verdict = PredicateVerdict("affine morphism" if mode == "affine" else "weak equivalence")
    sch = is_schematic_morphism(f, paranoid=paranoid)
    if not verdict.add(Obligation("schematic", "f is schematic", sch.verdict, sch.to_json())):
        return verdict
    src, tgt = f.source, f.target
    for y in range(len(tgt)):
        pre = f.preimage(tgt.poset.up[y])
        name = tgt.points[y]
        if pre == 0:
            if mode == "weak_equivalence":
                verdict.add(Obligation("sections", f"preimage of U_{name} is empty", False))
                return verdict
            verdict.add(Obligation("affine", f"preimage of U_{name} is empty", True))
            continue
        aff = is_affine(src.subspace(pre), paranoid)
        if not verdict.add(Obligation("affine", f"preimage of U_{name} is affine", aff.verdict, aff.to_json())):
            return verdict
        if mode == "weak_equivalence":
            comps = src.poset.connected_components(pre)
            if len(comps) != 1:
                verdict.add(Obligation("sections", f"preimage of U_{name} is disconnected", False))
                return verdict
            if src.is_rational:
                common = src.common_poles(pre)
                ok = common == tgt.poles[y]
                label = f"H^0 over the preimage of U_{name} is R_{format_poles(common, src.universe)}"
                if not verdict.add(Obligation("sections", label, ok)):
                    return verdict
            else:
                verdict.add(Obligation("sections", f"preimage of U_{name} is connected", True))
    return verdict


# ---------------------------------------------------------------------------
# constructions


@dataclass(frozen=True, eq=False)
class SteinFactorization:
    middle: RingedFiniteSpace
    stein: MorphismDescriptor
    affine: MorphismDescriptor

    def to_json(self) -> dict:
        return {
            "space": self.middle.to_json(),
            "stein_part": {"map": self.stein.as_dict()},
            "affine_part": {"map": self.affine.as_dict()},
        }


def stein_factorization(f: MorphismDescriptor) -> SteinFactorization:
    """``f = a ∘ f'`` with ``f'_* O = O_{Y'}`` and ``a`` the identity on points."""
    src, tgt = f.source, f.target
    poles = []
    for y in range(len(tgt)):
        pre = f.preimage(tgt.poset.up[y])
        comps = src.poset.connected_components(pre)
        if len(comps) != 1:
            raise UnrepresentableError(
                f"H^0 over the preimage of U_{tgt.points[y]} is not a single pole ring ({len(comps)} components)"
            )
        poles.append(src.common_poles(pre))
    if src.is_rational:
        middle = RingedFiniteSpace(tgt.poset, tgt.universe, tuple(poles))
    else:
        middle = RingedFiniteSpace(tgt.poset, tgt.universe)
    stein = MorphismDescriptor(src, middle, f.mapping)
    affine = MorphismDescriptor(middle, tgt, tuple(range(len(tgt))))
    return SteinFactorization(middle, stein, affine)


@dataclass(frozen=True, eq=False)
class FiberedProduct:
    space: RingedFiniteSpace
    first: MorphismDescriptor
    second: MorphismDescriptor
    schematic: PredicateVerdict
    projections_schematic: tuple[PredicateVerdict, PredicateVerdict]

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "first_projection": self.first.as_dict(),
            "second_projection": self.second.as_dict(),
            "schematic": self.schematic.to_json(),
            "projections_schematic": [v.to_json() for v in self.projections_schematic],
        }


def fibered_product(f: MorphismDescriptor, g: MorphismDescriptor, paranoid: bool = False) -> FiberedProduct:
    """``X ×_S Y`` with componentwise order and stalks ``O_x ⊗_{O_s} O_y``."""
    if f.target != g.target:
        raise InputError("the two morphisms must share their target")
    X, Y, S = f.source, g.source, f.target
    if X.universe != Y.universe:
        raise InputError("the two sources live in different universes")
    pairs = [(x, y) for x in range(len(X)) for y in range(len(Y)) if f.mapping[x] == g.mapping[y]]
    if not pairs:
        raise InputError("the fibered product is empty")
    labels = {pair_label(X.points[x], Y.points[y]): (x, y) for x, y in pairs}
    relations = []
    for (x1, y1), (x2, y2) in itertools.permutations(pairs, 2):
        if X.poset.leq(x1, x2) and Y.poset.leq(y1, y2):
            relations.append((pair_label(X.points[x1], Y.points[y1]), pair_label(X.points[x2], Y.points[y2])))
    poset = FinitePoset.from_relations(labels, relations)
    if X.is_rational:
        poles = []
        for label in poset.points:
            x, y = labels[label]
            s = f.mapping[x]
            tx, ty = X.poles[x], Y.poles[y]
            if S.poles[s].is_empty and not tx.is_empty and not ty.is_empty:
                raise UnrepresentableError(
                    f"O_{X.points[x]} ⊗_k O_{Y.points[y]} is not a subring of k(x)"
                )
            poles.append(tx.union(ty))
        Z = RingedFiniteSpace(poset, X.universe, tuple(poles))
    else:
        Z = RingedFiniteSpace(poset, X.universe)
    first = MorphismDescriptor(Z, X, tuple(labels[p][0] for p in poset.points))
    second = MorphismDescriptor(Z, Y, tuple(labels[p][1] for p in poset.points))
    return FiberedProduct(
        Z,
        first,
        second,
        is_schematic(Z, paranoid),
        (is_schematic_morphism(first, paranoid=paranoid), is_schematic_morphism(second, paranoid=paranoid)),
    )


def all_morphisms(source: RingedFiniteSpace, target: RingedFiniteSpace):
    """Every valid morphism ``source -> target`` (brute force; small spaces only)."""
    n, m = len(source), len(target)
    for images in itertools.product(range(m), repeat=n):
        if not all(target.poset.leq(images[a], images[b]) for a, b in source.poset.hasse):
            continue
        if source.is_rational and not all(target.poles[images[x]].issubset(source.poles[x]) for x in range(n)):
            continue
        yield MorphismDescriptor(source, target, images)


def universal_property_holds(product: FiberedProduct, f: MorphismDescriptor, g: MorphismDescriptor, test: RingedFiniteSpace) -> bool:
    """For all ``u: T -> X``, ``v: T -> Y`` with ``f u = g v`` there is exactly one ``h: T -> Z``."""
    to_z = list(all_morphisms(test, product.space))
    for u in all_morphisms(test, f.source):
        for v in all_morphisms(test, g.source):
            if any(f.mapping[a] != g.mapping[b] for a, b in zip(u.mapping, v.mapping)):
                continue
            hits = 0
            for h in to_z:
                if all(product.first.mapping[z] == a for z, a in zip(h.mapping, u.mapping)) and all(
                    product.second.mapping[z] == b for z, b in zip(h.mapping, v.mapping)
                ):
                    hits += 1
            if hits != 1:
                return False
    return True
