"""
Scalars for graded diagram rewriting.

The coefficient ring is k = Z[X^±1, Y^±1, Z^±1] / (X^2 = Y^2 = 1).  Its
units are exactly the signed monomials ±X^a Y^b Z^n with a, b in {0, 1},
which is why :class:`Unit` carries a sign bit.  Degrees of diagram
generators live in Z^2 and interact with scalars through the pairing

    mu((a, b), (c, d)) = X^(ac) * Y^(bd) * Z^(ad - bc),

which prices the exchange of two vertically stacked generators.
"""

from __future__ import annotations

import dataclasses
import re
from typing import Iterable, Mapping, NamedTuple


class Grading(NamedTuple):
    """An element of the grading group Z^2."""

    p: int
    q: int

    def __add__(self, other: "Grading") -> "Grading":
        return Grading(self.p + other.p, self.q + other.q)

    def __neg__(self) -> "Grading":
        return Grading(-self.p, -self.q)

    def reduce(self, mod: tuple[int, int]) -> "Grading":
        """Reduce componentwise; a modulus of 0 leaves the entry in Z."""
        mp, mq = mod
        return Grading(self.p % mp if mp else self.p, self.q % mq if mq else self.q)


ZERO_DEG = Grading(0, 0)


@dataclasses.dataclass(frozen=True)
class Unit:
    """A unit of k: sign * X^x * Y^y * Z^z with x, y in {0, 1}."""

    sign: int = 1
    x: int = 0
    y: int = 0
    z: int = 0

    def __post_init__(self):
        assert self.sign in (1, -1)
        assert self.x in (0, 1) and self.y in (0, 1)

    def __mul__(self, other: "Unit") -> "Unit":
        return Unit(
            self.sign * other.sign,
            (self.x + other.x) % 2,
            (self.y + other.y) % 2,
            self.z + other.z,
        )

    def inverse(self) -> "Unit":
        # X and Y are self-inverse; only the Z exponent flips.
        return Unit(self.sign, self.x, self.y, -self.z)

    def __pow__(self, n: int) -> "Unit":
        if n < 0:
            return self.inverse() ** (-n)
        acc = ONE
        for _ in range(n):
            acc = acc * self
        return acc

    @property
    def is_one(self) -> bool:
        return self == ONE

    def as_ring(self) -> "RingElement":
        return RingElement({(self.x, self.y, self.z): self.sign})

    def __str__(self) -> str:
        parts = []
        if self.x:
            parts.append("X")
        if self.y:
            parts.append("Y")
        if self.z:
            parts.append("Z" if self.z == 1 else f"Z^{self.z}")
        body = "*".join(parts) if parts else "1"
        return body if self.sign == 1 else "-" + body


ONE = Unit()
X = Unit(1, 1, 0, 0)
Y = Unit(1, 0, 1, 0)
Z = Unit(1, 0, 0, 1)
MINUS_ONE = Unit(-1, 0, 0, 0)


def mu(g: Grading, h: Grading) -> Unit:
    """The pairing X^(ac) Y^(bd) Z^(ad-bc) for g = (a,b), h = (c,d)."""
    a, b = g
    c, d = h
    return Unit(1, (a * c) % 2, (b * d) % 2, a * d - b * c)


def mu_sign(g: Grading, h: Grading) -> Unit:
    """Super variant of the pairing: (-1)^(ac) for g = (a,b), h = (c,d)."""
    return MINUS_ONE if (g.p * h.p) % 2 else ONE


# Keys of a ring element: exponents (x, y, z) of a unit monomial, x,y in {0,1}.
Monomial = tuple[int, int, int]


class RingElement:
    """An element of k as a finite map {unit monomial: integer coefficient}.

    Zero coefficients are dropped on construction, so equality is structural.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, int] | None = None):
        clean: dict[Monomial, int] = {}
        if terms:
            for (x, y, z), c in terms.items():
                if c:
                    key = (x % 2, y % 2, z)
                    clean[key] = clean.get(key, 0) + c
                    if not clean[key]:
                        del clean[key]
        self.terms = clean

    @classmethod
    def zero(cls) -> "RingElement":
        return cls()

    @classmethod
    def one(cls) -> "RingElement":
        return cls({(0, 0, 0): 1})

    @classmethod
    def from_int(cls, n: int) -> "RingElement":
        return cls({(0, 0, 0): n})

    @classmethod
    def from_unit(cls, u: Unit) -> "RingElement":
        return cls({(u.x, u.y, u.z): u.sign})

    def __eq__(self, other) -> bool:
        return isinstance(other, RingElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "RingElement") -> "RingElement":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return RingElement(out)

    def __neg__(self) -> "RingElement":
        return RingElement({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other: "RingElement") -> "RingElement":
        out: dict[Monomial, int] = {}
        for (x1, y1, z1), c1 in self.terms.items():
            for (x2, y2, z2), c2 in other.terms.items():
                key = ((x1 + x2) % 2, (y1 + y2) % 2, z1 + z2)
                out[key] = out.get(key, 0) + c1 * c2
        return RingElement(out)

    def scale(self, u: Unit) -> "RingElement":
        return RingElement(
            {((x + u.x) % 2, (y + u.y) % 2, z + u.z): u.sign * c
             for (x, y, z), c in self.terms.items()}
        )

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def as_unit(self) -> Unit | None:
        """Return the unit this element equals, or None if it is not a unit."""
        if len(self.terms) != 1:
            return None
        ((x, y, z), c), = self.terms.items()
        if c not in (1, -1):
            return None
        return Unit(c, x, y, z)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for (x, y, z), c in sorted(self.terms.items()):
            body = []
            if x:
                body.append("X")
            if y:
                body.append("Y")
            if z:
                body.append("Z" if z == 1 else f"Z^{z}")
            mono = "*".join(body)
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if mono and mag == 1:
                term = mono
            elif mono:
                term = f"{mag}*{mono}"
            else:
                term = str(mag)
            out.append(f"{sign} {term}" if out else (f"- {term}" if c < 0 else term))
        return " ".join(out)

    def __repr__(self) -> str:
        return f"RingElement({self})"


_TERM_RE = re.compile(
    r"\s*(?P<sign>[+-])?\s*"
    r"(?:(?P<int>\d+)\s*(?:\*\s*)?)?"
    r"(?P<x>X\s*(?:\*\s*)?)?"
    r"(?P<y>Y\s*(?:\*\s*)?)?"
    r"(?P<z>Z(?:\s*\^\s*(?P<zexp>-?\d+))?)?"
    r"\s*"
)


class ScalarParseError(ValueError):
    pass


def parse_ring(text: str) -> RingElement:
    """Parse a sum of signed monomial terms, e.g. ``"+2*X*Y*Z^-3 - 1"``."""
    text = text.strip()
    if not text or text == "0":
        return RingElement.zero()
    pos = 0
    terms: dict[Monomial, int] = {}
    first = True
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ScalarParseError(f"cannot parse scalar at {text[pos:]!r}")
        sign = m.group("sign")
        if sign is None and not first:
            raise ScalarParseError(f"missing sign between terms in {text!r}")
        coeff = int(m.group("int")) if m.group("int") else 1
        if not m.group("int") and not m.group("x") and not m.group("y") and not m.group("z"):
            raise ScalarParseError(f"empty term in {text!r}")
        if sign == "-":
            coeff = -coeff
        x = 1 if m.group("x") else 0
        y = 1 if m.group("y") else 0
        z = int(m.group("zexp")) if m.group("zexp") else (1 if m.group("z") else 0)
        key = (x, y, z)
        terms[key] = terms.get(key, 0) + coeff
        pos = m.end()
        first = False
    return RingElement(terms)


def parse_unit(text: str) -> Unit:
    u = parse_ring(text).as_unit()
    if u is None:
        raise ScalarParseError(f"{text!r} is not a unit monomial")
    return u


def prod(units: Iterable[Unit]) -> Unit:
    acc = ONE
    for u in units:
        acc = acc * u
    return acc
