"""Truncated-window cross-check for graded cohomology.

Instead of reasoning about classes, this enumerates concrete elements of
``k(x)`` (``1``, ``x^n``, ``x^j / v^m`` for each declared place ``v`` and a
representative undeclared place), decides stalk membership by partial
fractions, and computes the cohomology of the resulting finite sheaf for each
element separately.  Only meant as an oracle; never the shipped answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .linalg import AbelianGroup
from .poset import bits
from .rational import RationalElem, RationalUniverse, is_irreducible, p_norm
from .sheaves import FracLine, FracMonoSheaf, PatternSheaf, StructureSheaf, UnsupportedError, pattern_as_abelian
from .space import RingedFiniteSpace

DEFAULT_WINDOW = 20


def undeclared_place(universe: RationalUniverse) -> tuple:
    """A monic irreducible polynomial not in the declared list (``x - c`` when possible)."""
    ring = universe.field
    declared = {p.poly for p in universe.finite_places}
    bound = ring.characteristic if ring.characteristic else 10**6
    for c in range(1, bound):
        poly = p_norm(ring, (-c, 1))
        if poly not in declared:
            return poly
    for c in range(bound):
        poly = p_norm(ring, (c, 0, 1))
        if poly not in declared and is_irreducible(ring, poly):
            return poly
    raise ValueError("no undeclared place of degree <= 2")


def _power(elem: RationalElem, n: int) -> RationalElem:
    out = RationalElem.make(elem.universe, (1,), (1,))
    for _ in range(n):
        out = out * elem
    return out


def window_elements(universe: RationalUniverse, size: int, laurent: bool) -> list[tuple[str, RationalElem]]:
    """Labelled basis elements inside the window.

    ``laurent`` selects the fractional-module grading (``x^d`` for
    ``|d| <= size``, polar towers at places other than ``x``).
    """
    ring = universe.field
    one = RationalElem.make(universe, (1,), (1,))
    x = RationalElem.make(universe, p_norm(ring, (0, 1)), (1,))
    zero = universe.zero_place
    out = []
    if laurent:
        xinv = x.inverse()
        for d in range(-size, size + 1):
            out.append((f"laurent:{d}", _power(x, d) if d >= 0 else _power(xinv, -d)))
    else:
        out.append(("constant", one))
        for n in range(1, size + 1):
            out.append(("infinity", _power(x, n)))
    towers = [(f"place:{p.name}", p.poly) for p in universe.finite_places if not (laurent and p.name == zero)]
    towers.append(("unlisted", undeclared_place(universe)))
    for label, poly in towers:
        base = RationalElem.make(universe, (1,), poly)
        for m in range(1, size + 1):
            denom = _power(base, m)
            for j in range(len(poly) - 1):
                out.append((label, _power(x, j) * denom))
    return out


@dataclass(frozen=True, eq=False)
class WindowReport:
    size: int
    degrees: tuple[dict, ...]
    counts: dict
    stabilized: bool
    history: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "window": self.size,
            "stabilized": self.stabilized,
            "degrees": [{"degree": i, "classes": dict(sorted(d.items()))} for i, d in enumerate(self.degrees)],
        }

    def pretty(self) -> str:
        lines = [f"window {self.size} ({'stabilized' if self.stabilized else 'NOT stabilized'})"]
        for i, d in enumerate(self.degrees):
            body = ", ".join(f"{k}: {v}" for k, v in sorted(d.items()) if v) or "0"
            lines.append(f"H^{i}: {body}")
        return "\n".join(lines)


def _element_dims(space: RingedFiniteSpace, mask: int, vmask: int, cache: dict) -> list[int]:
    from .cohomology import abelian_complex, presented_groups

    if vmask in cache:
        return cache[vmask]
    nd = space.poset.dimension(mask) + 1
    sheaf = pattern_as_abelian(space, vmask, space.ring)
    groups: list[AbelianGroup] = presented_groups(abelian_complex(space, sheaf, mask).presented, nd)
    dims = [g.rank for g in groups]
    cache[vmask] = dims
    return dims


def _totals(space, mask, membership, elements, nd, cache):
    degrees = [dict() for _ in range(nd)]
    counts: dict[str, int] = {}
    for label, elem in elements:
        counts[label] = counts.get(label, 0) + 1
        v = 0
        for t in bits(mask):
            if membership(t, elem):
                v |= 1 << t
        dims = _element_dims(space, mask, v, cache) if v else [0] * nd
        for i in range(nd):
            degrees[i][label] = degrees[i].get(label, 0) + dims[i]
    return degrees, counts


def window_cohomology(space: RingedFiniteSpace, mask: int, sheaf, size: int = DEFAULT_WINDOW) -> WindowReport:
    if not space.is_rational:
        raise UnsupportedError("the window oracle needs the rational universe")
    if size < 3:
        raise ValueError("window must be at least 3")
    universe = space.universe
    nd = space.poset.dimension(mask) + 1
    cache: dict = {}
    if isinstance(sheaf, StructureSheaf):
        lines = [(None, lambda t, e: e.is_in(space.poles[t]))]
        laurent = False
    elif isinstance(sheaf, FracMonoSheaf):
        lines = []
        for k, line in enumerate(sheaf.summands):
            prefix = f"summand{k}/" if len(sheaf.summands) > 1 else ""
            lines.append((prefix, _line_membership(universe, line)))
        laurent = True
    elif isinstance(sheaf, PatternSheaf):
        raise UnsupportedError("pattern sheaves have no grading to truncate")
    else:
        raise UnsupportedError(f"window mode for {type(sheaf).__name__}")
    history = []
    for n in (size - 2, size - 1, size):
        elements = window_elements(universe, n, laurent)
        degrees = [dict() for _ in range(nd)]
        counts: dict[str, int] = {}
        for prefix, member in lines:
            d, c = _totals(space, mask, member, elements, nd, cache)
            tag = prefix or ""
            for i in range(nd):
                for label, v in d[i].items():
                    degrees[i][tag + label] = v
            for label, v in c.items():
                counts[tag + label] = v
        history.append((degrees, counts))
    stabilized = _stable(history)
    degrees, counts = history[-1]
    return WindowReport(size, tuple(degrees), counts, stabilized, tuple(history))


def _line_membership(universe: RationalUniverse, line: FracLine):
    x = RationalElem.make(universe, p_norm(universe.field, (0, 1)), (1,))
    xinv = x.inverse()

    def member(t: int, elem: RationalElem) -> bool:
        a = line.exps[t]
        shifted = elem * (_power(xinv, a) if a >= 0 else _power(x, -a))
        return shifted.is_in(line.poles[t])

    return member


def _group(label: str) -> str:
    """Laurent degrees are summed together; other classes stand alone."""
    prefix, _, body = label.rpartition("/")
    if body.startswith("laurent:"):
        return (prefix + "/" if prefix else "") + "laurent"
    return label


def _stable(history) -> bool:
    """Per-class increments agree across the last three windows."""
    sums = []
    for degrees, _ in history:
        agg = []
        for d in degrees:
            acc: dict[str, int] = {}
            for label, v in d.items():
                key = _group(label)
                acc[key] = acc.get(key, 0) + v
            agg.append(acc)
        sums.append(agg)
    for i in range(len(sums[0])):
        keys = set(sums[0][i]) | set(sums[1][i]) | set(sums[2][i])
        for k in keys:
            a, b, c = (s[i].get(k, 0) for s in sums)
            if b - a != c - b:
                return False
    return True


def expected_from_exact(report, size: int, counts: dict) -> list[dict]:
    """Project an exact report onto the window: per class, dimension times window count."""
    out = []
    for i in range(len(report.degrees)):
        acc: dict[str, int] = {}
        for piece in report.pieces(i):
            label = piece.pattern
            prefix, _, body = label.rpartition("/")
            prefix = prefix + "/" if prefix else ""
            if body.startswith("laurent:"):
                lo, hi = _bounds(body[len("laurent:"):])
                lo = -size if lo is None else max(lo, -size)
                hi = size if hi is None else min(hi, size)
                for d in range(lo, hi + 1):
                    key = f"{prefix}laurent:{d}"
                    acc[key] = acc.get(key, 0) + piece.dim
            else:
                acc[label] = acc.get(label, 0) + piece.dim * counts.get(label, 0)
        out.append(acc)
    return out


def _bounds(text: str):
    if ".." not in text:
        v = int(text)
        return v, v
    lo, hi = text.split("..")
    return (None if lo == "-inf" else int(lo)), (None if hi == "inf" else int(hi))


def agrees_with_exact(report, window: WindowReport) -> bool:
    expected = expected_from_exact(report, window.size, window.counts)
    for i, d in enumerate(window.degrees):
        exp = expected[i] if i < len(expected) else {}
        for label in set(d) | set(exp):
            if d.get(label, 0) != exp.get(label, 0):
                return False
    return True
