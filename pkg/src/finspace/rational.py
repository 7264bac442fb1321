"""Univariate rational functions, places of the projective line and pole sets.

A stalk ring ``R_T`` is the ring of rational functions whose poles lie in the
pole set ``T``.  ``R_{inf} = k[x]`` and ``R_ALL = k(x)``.  Elements are kept as
a reduced fraction and decomposed into partial fractions on demand.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .linalg import QQ, PrimeField, Ring, ring_from_name

INFINITY = "inf"

Poly = tuple  # coefficients, lowest degree first, no trailing zeros


class PoleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# dense univariate polynomials over QQ or GF(p)


def _red(ring: Ring, v):
    return v % ring.p if isinstance(ring, PrimeField) else v


def p_norm(ring: Ring, coeffs: Iterable) -> Poly:
    out = [_red(ring, ring.coerce(c)) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def p_deg(a: Poly) -> int:
    return len(a) - 1 if a else -1


def p_add(ring: Ring, a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return p_norm(ring, [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def p_neg(ring: Ring, a: Poly) -> Poly:
    return p_norm(ring, [-c for c in a])


def p_sub(ring: Ring, a: Poly, b: Poly) -> Poly:
    return p_add(ring, a, p_neg(ring, b))


def p_mul(ring: Ring, a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return p_norm(ring, out)


def p_scale(ring: Ring, a: Poly, c) -> Poly:
    return p_norm(ring, [x * c for x in a])


def _inv(ring: Ring, c):
    if isinstance(ring, PrimeField):
        return pow(c, -1, ring.p)
    return 1 / Fraction(c)


def p_divmod(ring: Ring, a: Poly, b: Poly) -> tuple[Poly, Poly]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(a)
    lead_inv = _inv(ring, b[-1])
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(rem) >= len(b) and rem:
        shift = len(rem) - len(b)
        c = _red(ring, rem[-1] * lead_inv)
        q[shift] = c
        for i, bc in enumerate(b):
            rem[shift + i] = _red(ring, rem[shift + i] - c * bc)
        while rem and rem[-1] == 0:
            rem.pop()
    return p_norm(ring, q), p_norm(ring, rem)


def p_monic(ring: Ring, a: Poly) -> Poly:
    return p_scale(ring, a, _inv(ring, a[-1])) if a else a


def p_gcd(ring: Ring, a: Poly, b: Poly) -> Poly:
    while b:
        a, b = b, p_divmod(ring, a, b)[1]
    return p_monic(ring, a)


def p_xgcd(ring: Ring, a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g`` monic."""
    r0, r1 = a, b
    s0, s1 = (1,), ()
    t0, t1 = (), (1,)
    s0, t0 = p_norm(ring, s0), p_norm(ring, t0)
    while r1:
        q, r = p_divmod(ring, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, p_sub(ring, s0, p_mul(ring, q, s1))
        t0, t1 = t1, p_sub(ring, t0, p_mul(ring, q, t1))
    lead = _inv(ring, r0[-1])
    return p_scale(ring, r0, lead), p_scale(ring, s0, lead), p_scale(ring, t0, lead)


def p_powmod(ring: Ring, base: Poly, exp: int, mod: Poly) -> Poly:
    result: Poly = p_norm(ring, (1,))
    base = p_divmod(ring, base, mod)[1]
    while exp:
        if exp & 1:
            result = p_divmod(ring, p_mul(ring, result, base), mod)[1]
        base = p_divmod(ring, p_mul(ring, base, base), mod)[1]
        exp >>= 1
    return result


def p_eval(ring: Ring, a: Poly, x):
    acc = 0
    for c in reversed(a):
        acc = _red(ring, acc * x + c)
    return acc


_TERM = re.compile(r"([+-]?)([^+-]+)")


def parse_poly(ring: Ring, text: str) -> Poly:
    """Parse expressions such as ``x^2 - 3/4*x + 1`` (variable ``x``)."""
    src = text.replace(" ", "")
    if src.startswith("(") and src.endswith(")"):
        src = src[1:-1]
    if not src:
        raise PoleError("empty polynomial")
    pos = 0
    coeffs: dict[int, Fraction] = {}
    for m in _TERM.finditer(src):
        if m.start() != pos:
            raise PoleError(f"cannot parse polynomial {text!r}")
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        term = m.group(2)
        if "x" in term:
            coef_txt, _, rest = term.partition("x")
            coef_txt = coef_txt.rstrip("*")
            coef = Fraction(coef_txt) if coef_txt else Fraction(1)
            if rest == "":
                exp = 1
            elif rest.startswith("^") and rest[1:].isdigit():
                exp = int(rest[1:])
            else:
                raise PoleError(f"cannot parse term {term!r}")
        else:
            try:
                coef = Fraction(term)
            except ValueError as exc:
                raise PoleError(f"cannot parse term {term!r}") from exc
            exp = 0
        coeffs[exp] = coeffs.get(exp, Fraction(0)) + sign * coef
    if pos != len(src):
        raise PoleError(f"cannot parse polynomial {text!r}")
    top = max(coeffs)
    return p_norm(ring, [coeffs.get(i, 0) for i in range(top + 1)])


def _fmt_coeff(c) -> str:
    return str(c)


def format_poly(a: Poly) -> str:
    if not a:
        return "0"
    parts = []
    for i in range(len(a) - 1, -1, -1):
        c = a[i]
        if c == 0:
            continue
        neg = c < 0 if isinstance(c, Fraction) else False
        mag = -c if neg else c
        if i == 0:
            body = _fmt_coeff(mag)
        else:
            mono = "x" if i == 1 else f"x^{i}"
            body = mono if mag == 1 else f"{_fmt_coeff(mag)}*{mono}"
        if not parts:
            parts.append(f"-{body}" if neg else body)
        else:
            parts.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(parts)


def _rational_roots_candidates(ring: Ring, a: Poly) -> list[Fraction]:
    den = 1
    for c in a:
        den = den * Fraction(c).denominator // _g(den, Fraction(c).denominator)
    ints = [int(Fraction(c) * den) for c in a]
    lo = next(i for i, c in enumerate(ints) if c)
    if lo > 0:
        return [Fraction(0)]
    c0, cn = abs(ints[0]), abs(ints[-1])
    out = []
    for p in _divisors(c0):
        for q in _divisors(cn):
            out += [Fraction(p, q), Fraction(-p, q)]
    return out


def _g(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _divisors(n: int) -> list[int]:
    if n > 10**12:
        raise PoleError("coefficient too large for the rational root test")
    small = [d for d in range(1, int(n**0.5) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def is_irreducible(ring: Ring, a: Poly) -> bool | None:
    """True/False when decidable here, None when attestation is required.

    Over QQ only degrees up to 3 are decided (rational root test); over GF(p)
    every degree is decided (distinct-degree test).
    """
    n = p_deg(a)
    if n < 1:
        return False
    if n == 1:
        return True
    if isinstance(ring, PrimeField):
        x = p_norm(ring, (0, 1))
        power = x
        for _ in range(n // 2):
            power = p_powmod(ring, power, ring.p, a)
            if p_deg(p_gcd(ring, p_sub(ring, power, x), a)) > 0:
                return False
        return True
    if n <= 3:
        return not any(p_eval(ring, a, r) == 0 for r in _rational_roots_candidates(ring, a))
    return None


# ---------------------------------------------------------------------------
# places and pole sets


@dataclass(frozen=True)
class Place:
    """A closed point of the projective line: a monic irreducible or infinity."""

    name: str
    poly: Poly | None = None

    @property
    def is_infinity(self) -> bool:
        return self.poly is None

    @property
    def degree(self) -> int:
        return 1 if self.poly is None else p_deg(self.poly)

    def to_json(self) -> dict:
        if self.poly is None:
            return {"name": self.name, "kind": "infinity"}
        return {"name": self.name, "kind": "finite", "poly": format_poly(self.poly)}


@dataclass(frozen=True)
class PoleSet:
    """A finite set of declared places, or ALL (the whole function field)."""

    places: frozenset = frozenset()
    everything: bool = False

    @staticmethod
    def of(*names: str) -> "PoleSet":
        return PoleSet(frozenset(names))

    @property
    def is_all(self) -> bool:
        return self.everything

    @property
    def is_empty(self) -> bool:
        return not self.everything and not self.places

    def contains(self, name: str) -> bool:
        return self.everything or name in self.places

    def union(self, other: "PoleSet") -> "PoleSet":
        if self.everything or other.everything:
            return ALL
        return PoleSet(self.places | other.places)

    def intersection(self, other: "PoleSet") -> "PoleSet":
        if self.everything:
            return other
        if other.everything:
            return self
        return PoleSet(self.places & other.places)

    def issubset(self, other: "PoleSet") -> bool:
        if other.everything:
            return True
        if self.everything:
            return False
        return self.places <= other.places

    def difference(self, other: "PoleSet") -> "PoleSet":
        """Finite difference; ALL minus anything that is not ALL stays ALL."""
        if other.everything:
            return EMPTY
        if self.everything:
            return ALL
        return PoleSet(self.places - other.places)

    def ordered(self, order: tuple[str, ...]) -> list[str]:
        rank = {n: i for i, n in enumerate(order)}
        return sorted(self.places, key=lambda n: (rank.get(n, len(rank)), n))

    def to_json(self, order: tuple[str, ...] = ()):
        return "ALL" if self.everything else self.ordered(order)


ALL = PoleSet(frozenset(), True)
EMPTY = PoleSet()


@dataclass(frozen=True)
class RationalUniverse:
    """Field ``k`` plus the declared place list of the projective line."""

    field: Ring
    places: tuple[Place, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.places]
        if len(set(names)) != len(names):
            raise PoleError("duplicate place names")
        polys = [p.poly for p in self.places if p.poly is not None]
        if len(set(polys)) != len(polys):
            raise PoleError("two places share a polynomial")
        if sum(p.is_infinity for p in self.places) > 1:
            raise PoleError("more than one infinite place")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.places)

    @property
    def finite_places(self) -> tuple[Place, ...]:
        return tuple(p for p in self.places if not p.is_infinity)

    @property
    def infinity(self) -> str | None:
        return next((p.name for p in self.places if p.is_infinity), None)

    def place(self, name: str) -> Place:
        for p in self.places:
            if p.name == name:
                return p
        raise PoleError(f"unknown place {name!r}")

    def place_of_poly(self, poly: Poly) -> Place | None:
        return next((p for p in self.places if p.poly == poly), None)

    @property
    def zero_place(self) -> str | None:
        """Name of the place ``(x)`` when declared."""
        target = p_norm(self.field, (0, 1))
        hit = self.place_of_poly(target)
        return hit.name if hit else None

    def pole_set(self, raw) -> PoleSet:
        if raw == "ALL":
            return ALL
        if isinstance(raw, PoleSet):
            return raw
        names = list(raw)
        for n in names:
            self.place(n)
        return PoleSet(frozenset(names))

    def to_json(self) -> dict:
        return {"kind": "rational", "field": self.field.name, "places": [p.to_json() for p in self.places]}


def make_place(field_ring: Ring, name: str, poly_text: str | None, attest: bool = False) -> Place:
    if poly_text is None:
        return Place(name, None)
    poly = parse_poly(field_ring, poly_text)
    if not poly or poly[-1] != 1:
        raise PoleError(f"place {name!r}: polynomial {poly_text!r} is not monic")
    verdict = is_irreducible(field_ring, poly)
    if verdict is False:
        raise PoleError(f"place {name!r}: polynomial {poly_text!r} is reducible")
    if verdict is None and not attest:
        raise PoleError(f"place {name!r}: irreducibility of {poly_text!r} must be attested")
    return Place(name, poly)


def default_universe(field_ring: Ring = QQ) -> RationalUniverse:
    return RationalUniverse(
        field_ring,
        (
            make_place(field_ring, "zero", "x"),
            make_place(field_ring, "one", "x-1"),
            Place(INFINITY, None),
        ),
    )


def universe_from_json(doc: dict) -> RationalUniverse:
    field_ring = ring_from_name(str(doc.get("field", "Q")))
    if field_ring.name == "Z":
        raise PoleError("the rational universe needs a field, not Z")
    raw = doc.get("places")
    if raw is None:
        return default_universe(field_ring)
    places = []
    for entry in raw:
        kind = entry.get("kind", "finite")
        if kind == "infinity":
            places.append(Place(entry.get("name", INFINITY), None))
        elif kind == "finite":
            if "name" not in entry or "poly" not in entry:
                raise PoleError(f"finite place needs a name and a poly: {entry}")
            places.append(make_place(field_ring, entry["name"], entry["poly"], bool(entry.get("attest", False))))
        else:
            raise PoleError(f"unknown place kind {kind!r}")
    return RationalUniverse(field_ring, tuple(places))


# ---------------------------------------------------------------------------
# rational functions


@dataclass(frozen=True)
class PartialFractions:
    """Canonical decomposition: polynomial part, polar parts, undeclared rest.

    ``polar[name][m]`` is the numerator over ``v^m`` (degree below deg v);
    ``rest`` is ``(num, den)`` with ``den`` coprime to every declared place.
    """

    polynomial: Poly
    polar: dict = field(default_factory=dict)
    rest: tuple = ((), (1,))


@dataclass(frozen=True)
class RationalElem:
    """``num/den`` in lowest terms with monic denominator."""

    universe: RationalUniverse
    num: Poly
    den: Poly

    @staticmethod
    def make(universe: RationalUniverse, num: Poly, den: Poly) -> "RationalElem":
        ring = universe.field
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return RationalElem(universe, (), p_norm(ring, (1,)))
        g = p_gcd(ring, num, den)
        num = p_divmod(ring, num, g)[0]
        den = p_divmod(ring, den, g)[0]
        lead = _inv(ring, den[-1])
        return RationalElem(universe, p_scale(ring, num, lead), p_scale(ring, den, lead))

    @staticmethod
    def parse(universe: RationalUniverse, text: str) -> "RationalElem":
        """Parse an expression in ``x`` with ``+ - * / ^``, parentheses and rational constants."""
        return _ExprParser(universe, text).parse()

    def __str__(self) -> str:
        if self.den == (1,):
            return format_poly(self.num)
        return f"({format_poly(self.num)})/({format_poly(self.den)})"

    def _check(self, other: "RationalElem") -> None:
        if self.universe.field != other.universe.field:
            raise PoleError("elements over different fields")
        if self.universe.places != other.universe.places:
            raise PoleError("elements over different place lists")

    def __add__(self, other: "RationalElem") -> "RationalElem":
        self._check(other)
        r = self.universe.field
        num = p_add(r, p_mul(r, self.num, other.den), p_mul(r, other.num, self.den))
        return RationalElem.make(self.universe, num, p_mul(r, self.den, other.den))

    def __neg__(self) -> "RationalElem":
        return RationalElem(self.universe, p_neg(self.universe.field, self.num), self.den)

    def __sub__(self, other: "RationalElem") -> "RationalElem":
        return self + (-other)

    def __mul__(self, other: "RationalElem") -> "RationalElem":
        self._check(other)
        r = self.universe.field
        return RationalElem.make(self.universe, p_mul(r, self.num, other.num), p_mul(r, self.den, other.den))

    def inverse(self) -> "RationalElem":
        return RationalElem.make(self.universe, self.den, self.num)

    def decompose(self) -> PartialFractions:
        ring = self.universe.field
        poly, remainder = p_divmod(ring, self.num, self.den)
        den = self.den
        factors = []
        for place in self.universe.finite_places:
            m = 0
            while True:
                q, r = p_divmod(ring, den, place.poly)
                if r:
                    break
                den, m = q, m + 1
            if m:
                factors.append((place, m))
        # split remainder / (prod v^m * den) across coprime factors
        blocks = [(place.name, place.poly, m) for place, m in factors]
        if p_deg(den) > 0:
            blocks.append((None, den, 1))
        numerators: list[Poly] = []
        todo_num, todo_den = remainder, self.den
        for i, (_, base, m) in enumerate(blocks):
            part = _ppow(ring, base, m)
            other = p_divmod(ring, todo_den, part)[0]
            if i == len(blocks) - 1:
                numerators.append(todo_num)
                break
            g, s, t = p_xgcd(ring, part, other)
            # todo_num/(part*other) = (todo_num*t mod part)/part + (todo_num*s mod other)/other
            a = p_divmod(ring, p_mul(ring, todo_num, t), part)[1]
            b = p_divmod(ring, p_mul(ring, todo_num, s), other)[1]
            numerators.append(a)
            todo_num, todo_den = b, other
        polar: dict = {}
        rest = ((), p_norm(ring, (1,)))
        for (name, base, m), numer in zip(blocks, numerators):
            if name is None:
                rest = (numer, base)
                continue
            digits = {}
            j = 0
            while numer:
                numer, digit = p_divmod(ring, numer, base)
                if digit:
                    digits[m - j] = digit
                j += 1
            if digits:
                polar[name] = digits
        return PartialFractions(poly, polar, rest)

    @staticmethod
    def recompose(universe: RationalUniverse, parts: PartialFractions) -> "RationalElem":
        ring = universe.field
        total = RationalElem.make(universe, parts.polynomial, (1,))
        for name, digits in parts.polar.items():
            base = universe.place(name).poly
            for m, numer in digits.items():
                total = total + RationalElem.make(universe, numer, _ppow(ring, base, m))
        if parts.rest[0]:
            total = total + RationalElem.make(universe, parts.rest[0], parts.rest[1])
        return total

    def poles(self) -> tuple[frozenset, bool]:
        """Declared places where this element has a pole, and whether an
        undeclared pole occurs."""
        names = set()
        ring = self.universe.field
        den = self.den
        for place in self.universe.finite_places:
            q, r = p_divmod(ring, den, place.poly)
            if not r:
                names.add(place.name)
                while not r:
                    den = q
                    q, r = p_divmod(ring, den, place.poly)
        if p_deg(self.num) > p_deg(self.den) and self.universe.infinity:
            names.add(self.universe.infinity)
        undeclared = p_deg(den) > 0 or (p_deg(self.num) > p_deg(self.den) and not self.universe.infinity)
        return frozenset(names), undeclared

    def is_in(self, poles: PoleSet) -> bool:
        if poles.is_all:
            return True
        names, undeclared = self.poles()
        return not undeclared and names <= poles.places


class _ExprParser:
    _TOKEN = re.compile(r"\s*(?:(\d+)|(x)|([-+*/^()]))")

    def __init__(self, universe: RationalUniverse, text: str) -> None:
        self.universe = universe
        self.text = text
        self.tokens: list[str] = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = self._TOKEN.match(stripped, pos)
            if not m:
                raise PoleError(f"cannot parse {text!r} at offset {pos}")
            self.tokens.append(m.group(m.lastindex))
            pos = m.end()
        self.i = 0

    def _const(self, c) -> RationalElem:
        return RationalElem.make(self.universe, p_norm(self.universe.field, [c]), (1,))

    def _peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _take(self) -> str:
        tok = self._peek()
        if tok is None:
            raise PoleError(f"unexpected end of {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> RationalElem:
        if not self.tokens:
            raise PoleError("empty expression")
        out = self._sum()
        if self._peek() is not None:
            raise PoleError(f"trailing input in {self.text!r}")
        return out

    def _sum(self) -> RationalElem:
        if self._peek() in ("+", "-"):
            sign = self._take()
            acc = self._product()
            if sign == "-":
                acc = -acc
        else:
            acc = self._product()
        while self._peek() in ("+", "-"):
            op = self._take()
            rhs = self._product()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def _product(self) -> RationalElem:
        acc = self._power()
        while self._peek() in ("*", "/"):
            op = self._take()
            rhs = self._power()
            if op == "*":
                acc = acc * rhs
            else:
                if rhs.num == ():
                    raise PoleError(f"division by zero in {self.text!r}")
                acc = acc * rhs.inverse()
        return acc

    def _power(self) -> RationalElem:
        base = self._atom()
        if self._peek() == "^":
            self._take()
            exp = self._exponent()
            if exp < 0:
                if base.num == ():
                    raise PoleError(f"division by zero in {self.text!r}")
                base, exp = base.inverse(), -exp
            out = self._const(1)
            for _ in range(exp):
                out = out * base
            return out
        return base

    def _exponent(self) -> int:
        """An integer, optionally signed and parenthesized: ``2``, ``-2``, ``(-2)``."""
        wrapped = self._peek() == "("
        if wrapped:
            self._take()
        sign = 1
        if self._peek() == "-":
            self._take()
            sign = -1
        tok = self._take()
        if not tok or not tok.isdigit():
            raise PoleError(f"exponent must be an integer in {self.text!r}")
        if wrapped and self._take() != ")":
            raise PoleError(f"unbalanced parentheses in {self.text!r}")
        return sign * int(tok)

    def _atom(self) -> RationalElem:
        tok = self._take()
        if tok == "(":
            inner = self._sum()
            if self._take() != ")":
                raise PoleError(f"unbalanced parentheses in {self.text!r}")
            return inner
        if tok == "x":
            return RationalElem.make(self.universe, (0, 1), (1,))
        if tok.isdigit():
            return self._const(int(tok))
        if tok == "-":
            return -self._atom()
        raise PoleError(f"unexpected {tok!r} in {self.text!r}")


def _ppow(ring: Ring, base: Poly, m: int) -> Poly:
    out: Poly = p_norm(ring, (1,))
    for _ in range(m):
        out = p_mul(ring, out, base)
    return out


def pole_algebra(op: str, *args):
    """Dispatcher for the pole-set and element operations.

    ``membership(e, T)``, ``add(e, f)``, ``mul(e, f)``, ``union(S, T)``,
    ``intersect(S, T)``, ``subset(S, T)``, ``localize(T, delta)``.
    """
    if op == "membership":
        elem, poles = args
        return elem.is_in(poles)
    if op == "add":
        return args[0] + args[1]
    if op == "mul":
        return args[0] * args[1]
    if op in ("union", "localize"):
        return args[0].union(args[1])
    if op == "intersect":
        return args[0].intersection(args[1])
    if op == "subset":
        return args[0].issubset(args[1])
    raise PoleError(f"unknown pole-algebra operation {op!r}")
