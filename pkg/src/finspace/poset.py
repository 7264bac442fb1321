"""Finite posets viewed as finite topological spaces.

Opens are up-sets: ``U_p = {q : p <= q}`` is the smallest open containing
``p``.  Internally points are indices into the lexicographically sorted
point list and subsets are integer bitmasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class PosetError(ValueError):
    pass


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True, eq=False)
class FinitePoset:
    """A T0 finite space.

    ``up[i]`` is the bitmask of ``U_i``; ``classes`` maps every original label
    to the label of its T0 class.
    """

    points: tuple[str, ...]
    up: tuple[int, ...]
    classes: dict = field(default_factory=dict, compare=False)

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_relations(points: Iterable[str], relations: Iterable[Sequence[str]]) -> "FinitePoset":
        """Build from generating pairs ``(p, q)`` meaning ``p <= q``.

        The preorder closure is quotiented to a poset; each class is named by
        its lexicographically least member.
        """
        labels = sorted({str(p) for p in points})
        index = {p: i for i, p in enumerate(labels)}
        n = len(labels)
        reach = [1 << i for i in range(n)]
        for pair in relations:
            if len(pair) != 2:
                raise PosetError(f"relation {pair!r} is not a pair")
            a, b = str(pair[0]), str(pair[1])
            for x in (a, b):
                if x not in index:
                    raise PosetError(f"relation mentions unknown point {x!r}")
            reach[index[a]] |= 1 << index[b]
        # transitive closure (Warshall on bitmasks)
        for k in range(n):
            bit = 1 << k
            rk = reach[k]
            for i in range(n):
                if reach[i] & bit:
                    reach[i] |= rk
        # T0 quotient
        rep = {}
        for i in range(n):
            cls = [j for j in _bits(reach[i]) if reach[j] >> i & 1]
            rep[labels[i]] = labels[min(cls)]
        kept = sorted(set(rep.values()))
        kidx = {p: i for i, p in enumerate(kept)}
        up = []
        for p in kept:
            mask = 0
            for j in _bits(reach[index[p]]):
                mask |= 1 << kidx[rep[labels[j]]]
            up.append(mask)
        return FinitePoset(tuple(kept), tuple(up), rep)

    @staticmethod
    def from_json(doc: dict) -> "FinitePoset":
        pts = [p["id"] if isinstance(p, dict) else p for p in doc.get("points", [])]
        if len(set(map(str, pts))) != len(pts):
            raise PosetError("duplicate point identifiers")
        return FinitePoset.from_relations(pts, doc.get("relations", []))

    def to_json(self) -> dict:
        return {"points": list(self.points), "relations": [[self.points[a], self.points[b]] for a, b in self.hasse]}

    # -- basic structure --------------------------------------------------

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return isinstance(other, FinitePoset) and self.points == other.points and self.up == other.up

    def __hash__(self) -> int:
        return hash((self.points, self.up))

    @cached_property
    def index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    def idx(self, point: str) -> int:
        try:
            return self.index[point]
        except KeyError:
            if point in self.classes:
                return self.index[self.classes[point]]
            raise PosetError(f"unknown point {point!r}") from None

    @cached_property
    def full(self) -> int:
        return (1 << len(self.points)) - 1

    @cached_property
    def down(self) -> tuple[int, ...]:
        n = len(self.points)
        return tuple(sum(1 << j for j in range(n) if self.up[j] >> i & 1) for i in range(n))

    def leq(self, a: int, b: int) -> bool:
        return bool(self.up[a] >> b & 1)

    def lt(self, a: int, b: int) -> bool:
        return a != b and self.leq(a, b)

    @cached_property
    def hasse(self) -> tuple[tuple[int, int], ...]:
        """Covering pairs ``a < b`` with nothing strictly in between."""
        out = []
        for a in range(len(self.points)):
            above = self.up[a] & ~(1 << a)
            for b in _bits(above):
                between = above & self.down[b] & ~(1 << b)
                if not between:
                    out.append((a, b))
        return tuple(out)

    @cached_property
    def strict_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((a, b) for a in range(len(self.points)) for b in _bits(self.up[a]) if a != b)

    def members(self, mask: int) -> list[str]:
        return [self.points[i] for i in _bits(mask)]

    def mask_of(self, names: Iterable[str]) -> int:
        m = 0
        for n in names:
            m |= 1 << self.idx(n)
        return m

    def is_open(self, mask: int) -> bool:
        return all(self.up[i] & ~mask == 0 for i in _bits(mask))

    def up_closure(self, mask: int) -> int:
        out = 0
        for i in _bits(mask):
            out |= self.up[i]
        return out

    # -- chains and dimension ---------------------------------------------

    def chains(self, mask: int, length: int) -> list[tuple[int, ...]]:
        """Strict chains ``x_0 < ... < x_length`` inside ``mask``, sorted."""
        return self._chains(mask)[length] if length < len(self._chains(mask)) else []

    def all_chains(self, mask: int) -> list[list[tuple[int, ...]]]:
        return self._chains(mask)

    def _chains(self, mask: int) -> list[list[tuple[int, ...]]]:
        cache = self.__dict__.setdefault("_chain_cache", {})
        hit = cache.get(mask)
        if hit is not None:
            return hit
        by_len: list[list[tuple[int, ...]]] = []

        def extend(chain: tuple[int, ...]) -> None:
            n = len(chain) - 1
            while len(by_len) <= n:
                by_len.append([])
            by_len[n].append(chain)
            last = chain[-1]
            for nxt in _bits(self.up[last] & mask & ~(1 << last)):
                extend(chain + (nxt,))

        for i in _bits(mask):
            extend((i,))
        for group in by_len:
            group.sort()
        cache[mask] = by_len
        return by_len

    def dimension(self, mask: int | None = None) -> int:
        """Length of the longest strict chain; -1 for the empty set."""
        return len(self._chains(self.full if mask is None else mask)) - 1

    # -- opens ------------------------------------------------------------

    def minimal_open(self, point: str) -> "OpenSet":
        return OpenSet(self, self.up[self.idx(point)])

    def connected_components(self, mask: int) -> list[int]:
        left = mask
        comps = []
        while left:
            seed = left & -left
            comp = seed
            while True:
                grown = comp
                for i in _bits(comp):
                    grown |= (self.up[i] | self.down[i]) & mask
                if grown == comp:
                    break
                comp = grown
            comps.append(comp)
            left &= ~comp
        return comps

    def minimum(self, mask: int) -> int | None:
        for i in _bits(mask):
            if self.up[i] & mask == mask:
                return i
        return None

    def maximum(self, mask: int) -> int | None:
        for i in _bits(mask):
            if self.down[i] & mask == mask:
                return i
        return None

    def subposet(self, mask: int) -> "FinitePoset":
        keep = _bits(mask)
        names = [self.points[i] for i in keep]
        rel = [(self.points[a], self.points[b]) for a in keep for b in keep if a != b and self.leq(a, b)]
        return FinitePoset.from_relations(names, rel)

    def relabel(self, mapping: dict[str, str]) -> "FinitePoset":
        names = [mapping[p] for p in self.points]
        rel = [(mapping[self.points[a]], mapping[self.points[b]]) for a, b in self.hasse]
        return FinitePoset.from_relations(names, rel)


@dataclass(frozen=True)
class OpenSet:
    parent: FinitePoset
    mask: int

    def __post_init__(self) -> None:
        if not self.parent.is_open(self.mask):
            raise PosetError(f"{self.parent.members(self.mask)} is not an up-set")

    @property
    def members(self) -> list[str]:
        return self.parent.members(self.mask)

    def __and__(self, other: "OpenSet") -> "OpenSet":
        return OpenSet(self.parent, self.mask & other.mask)

    def __or__(self, other: "OpenSet") -> "OpenSet":
        return OpenSet(self.parent, self.mask | other.mask)


def minimal_open(poset: FinitePoset, point: str) -> OpenSet:
    return poset.minimal_open(point)


def enumerate_chains(poset: FinitePoset, mask: int, length: int) -> list[tuple[str, ...]]:
    if length < 0:
        raise PosetError("chain length must be non-negative")
    return [tuple(poset.points[i] for i in c) for c in poset.chains(mask, length)]


# ---------------------------------------------------------------------------
# products, quotients, cores


def pair_label(x: str, y: str) -> str:
    return f"({x},{y})"


def product_poset(left: FinitePoset, right: FinitePoset) -> tuple[FinitePoset, dict[str, tuple[str, str]]]:
    """Componentwise order on the cartesian product; also returns the label map."""
    labels = {pair_label(x, y): (x, y) for x in left.points for y in right.points}
    rel = []
    for x in left.points:
        for y in right.points:
            me = pair_label(x, y)
            for a, b in left.hasse:
                if left.points[a] == x:
                    rel.append((me, pair_label(left.points[b], y)))
            for a, b in right.hasse:
                if right.points[a] == y:
                    rel.append((me, pair_label(x, right.points[b])))
    return FinitePoset.from_relations(labels, rel), labels


def quotient_by_covering(
    carrier: FinitePoset | Sequence[str], cover: Sequence[Iterable[str]]
) -> tuple[FinitePoset, dict[str, str]]:
    """Quotient of ``carrier`` by ``s ~ s'`` iff ``U^s == U^s'``.

    ``U^s`` is the intersection of the cover members containing ``s``;
    ``[s] <= [s']`` iff ``U^s`` contains ``U^s'``.  Returns the quotient and
    the projection (point -> class label, the least representative).
    """
    if isinstance(carrier, FinitePoset):
        names = list(carrier.points)
    else:
        names = sorted({str(s) for s in carrier})
    pos = {s: i for i, s in enumerate(names)}
    opens = []
    for member in cover:
        m = 0
        for s in member:
            if str(s) not in pos:
                raise PosetError(f"cover mentions unknown point {s!r}")
            m |= 1 << pos[str(s)]
        if isinstance(carrier, FinitePoset) and not carrier.is_open(m):
            raise PosetError(f"cover member {sorted(map(str, member))} is not open")
        opens.append(m)
    full = (1 << len(names)) - 1
    union = 0
    for m in opens:
        union |= m
    if union != full:
        missing = [names[i] for i in _bits(full & ~union)]
        raise PosetError(f"cover does not cover the carrier: {missing}")
    star = []
    for i in range(len(names)):
        u = full
        for m in opens:
            if m >> i & 1:
                u &= m
        star.append(u)
    rep = {}
    for i, s in enumerate(names):
        same = [names[j] for j in range(len(names)) if star[j] == star[i]]
        rep[s] = min(same)
    classes = sorted(set(rep.values()))
    rel = []
    for a in classes:
        for b in classes:
            ua, ub = star[pos[a]], star[pos[b]]
            if a != b and ua & ub == ub:
                rel.append((a, b))
    return FinitePoset.from_relations(classes, rel), rep


def is_beat_point(poset: FinitePoset, mask: int, i: int) -> bool:
    above = poset.up[i] & mask & ~(1 << i)
    below = poset.down[i] & mask & ~(1 << i)
    return (above and poset.minimum(above) is not None) or (below and poset.maximum(below) is not None)


@dataclass(frozen=True)
class Core:
    poset: FinitePoset
    removed: tuple[str, ...]

    @property
    def profile(self) -> tuple[int, tuple[int, ...]]:
        """Isomorphism invariant: point count and sorted Hasse degrees."""
        deg = [0] * len(self.poset)
        for a, b in self.poset.hasse:
            deg[a] += 1
            deg[b] += 1
        return len(self.poset), tuple(sorted(deg))


def core_reduction(poset: FinitePoset) -> Core:
    """Remove beat points (lexicographically first each time) until none remain."""
    mask = poset.full
    removed = []
    while True:
        beat = next((i for i in _bits(mask) if is_beat_point(poset, mask, i)), None)
        if beat is None:
            break
        removed.append(poset.points[beat])
        mask &= ~(1 << beat)
    return Core(poset.subposet(mask), tuple(removed))


def bits(mask: int) -> list[int]:
    return _bits(mask)
