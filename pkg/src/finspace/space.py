"""Ringed finite spaces in the two supported universes.

* ``TopologicalUniverse``: every stalk is the same base ring (Z, Q or F_p)
  and every restriction is the identity.
* ``RationalUniverse``: the stalk at ``p`` is ``R_T`` for a pole set ``T_p``
  inside ``k(x)``; restrictions are the inclusions ``R_{T_p} -> R_{T_q}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .linalg import QQ, ZZ, Ring, ring_from_name
from .poset import FinitePoset, PosetError, bits
from .rational import ALL, EMPTY, PoleError, PoleSet, RationalUniverse, default_universe, universe_from_json


class InputError(ValueError):
    """Malformed or inconsistent input; ``where`` names the file, point or edge."""

    def __init__(self, message: str, where: str | None = None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class TopologicalUniverse:
    ring: Ring = ZZ

    def to_json(self) -> dict:
        return {"kind": "topological", "ring": self.ring.name}


Universe = TopologicalUniverse | RationalUniverse


@dataclass(frozen=True, eq=False)
class RingedFiniteSpace:
    poset: FinitePoset
    universe: Universe
    poles: tuple[PoleSet, ...] | None = None

    def __post_init__(self) -> None:
        if self.is_rational:
            if self.poles is None or len(self.poles) != len(self.poset):
                raise InputError("every point needs a pole set")
            for a, b in self.poset.hasse:
                if not self.poles[a].issubset(self.poles[b]):
                    raise InputError(
                        f"pole sets not monotone: T_{self.poset.points[a]} = {self._fmt(a)} "
                        f"is not inside T_{self.poset.points[b]} = {self._fmt(b)}",
                        where=f"edge {self.poset.points[a]}<{self.poset.points[b]}",
                    )

    def _fmt(self, i: int) -> str:
        return format_poles(self.poles[i], self.universe)

    @property
    def is_rational(self) -> bool:
        return isinstance(self.universe, RationalUniverse)

    @property
    def ring(self) -> Ring:
        return self.universe.field if self.is_rational else self.universe.ring

    @property
    def points(self) -> tuple[str, ...]:
        return self.poset.points

    def __len__(self) -> int:
        return len(self.poset)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RingedFiniteSpace)
            and self.poset == other.poset
            and self.universe == other.universe
            and self.poles == other.poles
        )

    def __hash__(self) -> int:
        return hash((self.poset, self.poles))

    def pole(self, point: str | int) -> PoleSet:
        i = point if isinstance(point, int) else self.poset.idx(point)
        return self.poles[i]

    def common_poles(self, mask: int) -> PoleSet:
        """``∩ T_t`` over ``mask``; the global-section ring of a connected open."""
        out = ALL
        for i in bits(mask):
            out = out.intersection(self.poles[i])
        return out

    def subspace(self, mask: int) -> "RingedFiniteSpace":
        sub = self.poset.subposet(mask)
        if not self.is_rational:
            return RingedFiniteSpace(sub, self.universe)
        return RingedFiniteSpace(sub, self.universe, tuple(self.pole(p) for p in sub.points))

    @cached_property
    def dimension(self) -> int:
        return self.poset.dimension()

    def to_json(self) -> dict:
        pts = []
        for i, p in enumerate(self.points):
            if self.is_rational:
                pts.append({"id": p, "poles": self.poles[i].to_json(self.universe.names)})
            else:
                pts.append({"id": p})
        rel = [[self.points[a], self.points[b]] for a, b in self.poset.hasse]
        return {"universe": self.universe.to_json(), "points": pts, "relations": rel}


def format_poles(poles: PoleSet, universe: RationalUniverse | None = None) -> str:
    if poles.is_all:
        return "ALL"
    order = universe.names if universe is not None else tuple(sorted(poles.places))
    return "{" + ",".join(poles.ordered(order)) + "}"


def ring_name(poles: PoleSet, universe: RationalUniverse) -> str:
    """Pretty name of ``R_T`` such as ``k[x]`` or ``k[x,1/x]``."""
    if poles.is_all:
        return "k(x)"
    if poles.is_empty:
        return "k"
    names = poles.ordered(universe.names)
    inf = universe.infinity
    zero = universe.zero_place
    finite = [n for n in names if n != inf]
    if inf in names:
        gens = ["x"]
        for n in finite:
            gens.append("1/x" if n == zero else f"1/({_poly_text(universe, n)})")
        return "k[" + ",".join(gens) + "]"
    if finite == [zero]:
        return "k[1/x]"
    return "R_{" + ",".join(names) + "}"


def _poly_text(universe: RationalUniverse, name: str) -> str:
    from .rational import format_poly

    return format_poly(universe.place(name).poly)


@dataclass(frozen=True, eq=False)
class MorphismDescriptor:
    """A monotone point map with ``T_{f(x)} ⊆ T_x`` (RATIONAL) or the identity on rings."""

    source: RingedFiniteSpace
    target: RingedFiniteSpace
    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        src, tgt = self.source, self.target
        if src.universe != tgt.universe:
            raise InputError("source and target live in different universes")
        if len(self.mapping) != len(src):
            raise InputError("point map must be defined on every source point")
        for a in range(len(src)):
            for b in bits(src.poset.up[a]):
                if not tgt.poset.leq(self.mapping[a], self.mapping[b]):
                    raise InputError(
                        "point map is not monotone",
                        where=f"edge {src.points[a]}<{src.points[b]}",
                    )
        if src.is_rational:
            for x in range(len(src)):
                y = self.mapping[x]
                if not tgt.poles[y].issubset(src.poles[x]):
                    raise InputError(
                        f"ring map O_{tgt.points[y]} -> O_{src.points[x]} is not an inclusion "
                        f"({format_poles(tgt.poles[y], tgt.universe)} not inside "
                        f"{format_poles(src.poles[x], src.universe)})",
                        where=f"point {src.points[x]}",
                    )

    def image(self, point: str) -> str:
        return self.target.points[self.mapping[self.source.poset.idx(point)]]

    def preimage(self, mask: int) -> int:
        out = 0
        for x, y in enumerate(self.mapping):
            if mask >> y & 1:
                out |= 1 << x
        return out

    def as_dict(self) -> dict[str, str]:
        return {self.source.points[x]: self.target.points[y] for x, y in enumerate(self.mapping)}

    def compose(self, after: "MorphismDescriptor") -> "MorphismDescriptor":
        """``after ∘ self``."""
        if after.source != self.target:
            raise InputError("morphisms are not composable")
        return MorphismDescriptor(self.source, after.target, tuple(after.mapping[y] for y in self.mapping))

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(), "map": self.as_dict()}


def identity_morphism(space: RingedFiniteSpace) -> MorphismDescriptor:
    return MorphismDescriptor(space, space, tuple(range(len(space))))


def morphism_from_dict(source: RingedFiniteSpace, target: RingedFiniteSpace, mapping: dict) -> MorphismDescriptor:
    out = [None] * len(source)
    for key, val in mapping.items():
        try:
            x = source.poset.idx(str(key))
            y = target.poset.idx(str(val))
        except PosetError as exc:
            raise InputError(str(exc), where="morphism map") from None
        if out[x] is not None and out[x] != y:
            raise InputError(f"point {key!r} mapped twice", where="morphism map")
        out[x] = y
    missing = [source.points[i] for i, v in enumerate(out) if v is None]
    if missing:
        raise InputError(f"points without an image: {missing}", where="morphism map")
    return MorphismDescriptor(source, target, tuple(out))


def point_space(universe: Universe, poles: PoleSet | None = None, name: str = "pt") -> RingedFiniteSpace:
    poset = FinitePoset.from_relations([name], [])
    if isinstance(universe, RationalUniverse):
        return RingedFiniteSpace(poset, universe, (poles if poles is not None else EMPTY,))
    return RingedFiniteSpace(poset, universe)


def morphism_to_point(space: RingedFiniteSpace, poles: PoleSet | None = None) -> MorphismDescriptor:
    """The structure map to a point; RATIONAL default stalk is ``k``."""
    target = point_space(space.universe, poles)
    return MorphismDescriptor(space, target, (0,) * len(space))


# ---------------------------------------------------------------------------
# JSON


def universe_of(doc: dict | None) -> Universe:
    if doc is None:
        return default_universe(QQ)
    kind = doc.get("kind", "rational")
    try:
        if kind == "topological":
            return TopologicalUniverse(ring_from_name(doc.get("ring", "Z")))
        if kind == "rational":
            return universe_from_json(doc)
    except (PoleError, ValueError) as exc:
        raise InputError(str(exc), where="universe") from None
    raise InputError(f"unknown universe kind {kind!r}", where="universe")


def space_from_json(doc: dict) -> RingedFiniteSpace:
    """Parse and validate a space document, T0-normalizing the poset."""
    if not isinstance(doc, dict):
        raise InputError("space document must be a JSON object")
    universe = universe_of(doc.get("universe"))
    raw_points = doc.get("points")
    if not isinstance(raw_points, list) or not raw_points:
        raise InputError("space needs a non-empty 'points' list")
    ids = []
    raw_poles = {}
    for entry in raw_points:
        if isinstance(entry, dict):
            if "id" not in entry:
                raise InputError("point entry without 'id'")
            pid = str(entry["id"])
            raw_poles[pid] = entry.get("poles")
        else:
            pid = str(entry)
            raw_poles[pid] = None
        ids.append(pid)
    if len(set(ids)) != len(ids):
        raise InputError("duplicate point identifiers")
    relations = doc.get("relations", [])
    try:
        poset = FinitePoset.from_relations(ids, relations)
    except (PosetError, TypeError) as exc:
        raise InputError(str(exc), where="relations") from None
    if not isinstance(universe, RationalUniverse):
        return RingedFiniteSpace(poset, universe)
    poles = {}
    for pid in ids:
        raw = raw_poles[pid]
        if raw is None:
            raise InputError("missing 'poles'", where=f"point {pid}")
        try:
            poles[pid] = universe.pole_set(raw)
        except PoleError as exc:
            raise InputError(str(exc), where=f"point {pid}") from None
    for a, b in relations:
        if not poles[str(a)].issubset(poles[str(b)]):
            raise InputError(
                f"pole sets not monotone: {format_poles(poles[str(a)], universe)} "
                f"not inside {format_poles(poles[str(b)], universe)}",
                where=f"edge {a}<{b}",
            )
    return RingedFiniteSpace(poset, universe, tuple(poles[p] for p in poset.points))


def load_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(exc.strerror or str(exc), where=str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON ({exc.msg}, line {exc.lineno})", where=str(path)) from None


def load_space(path: str | Path) -> RingedFiniteSpace:
    doc = load_json(path)
    try:
        return space_from_json(doc)
    except InputError as exc:
        raise InputError(str(exc), where=str(path)) from None


def _resolve(ref, base: Path | None) -> RingedFiniteSpace:
    if isinstance(ref, str):
        path = Path(ref) if base is None or Path(ref).is_absolute() else base / ref
        return load_space(path)
    return space_from_json(ref)


def morphism_from_json(doc: dict, base: Path | None = None) -> MorphismDescriptor:
    """``{"source": SPACE|path, "target": SPACE|path, "map": {...}}``."""
    for key in ("source", "target", "map"):
        if key not in doc:
            raise InputError(f"morphism document needs {key!r}")
    return morphism_from_dict(_resolve(doc["source"], base), _resolve(doc["target"], base), doc["map"])


def load_morphism(path: str | Path) -> MorphismDescriptor:
    path = Path(path)
    doc = load_json(path)
    try:
        return morphism_from_json(doc, path.parent)
    except InputError as exc:
        raise InputError(str(exc), where=str(path)) from None


def validate_space(doc: dict) -> RingedFiniteSpace:
    return space_from_json(doc)


def rational_space(
    points: Iterable[str],
    relations: Iterable,
    poles: dict[str, object],
    universe: RationalUniverse | None = None,
) -> RingedFiniteSpace:
    """Convenience constructor; pole entries accept lists of names or ``"ALL"``."""
    universe = universe or default_universe()
    pts = [{"id": p, "poles": poles[p]} for p in points]
    return space_from_json({"universe": universe.to_json(), "points": pts, "relations": [list(r) for r in relations]})


def topological_space(points: Iterable[str], relations: Iterable, ring: Ring = ZZ) -> RingedFiniteSpace:
    return space_from_json(
        {"universe": {"kind": "topological", "ring": ring.name}, "points": list(points), "relations": [list(r) for r in relations]}
    )
