"""
The graded gl2 web/foam instance.

Objects for the parameter ``d`` are sequences over {1, 2} summing to d.
Entry positions carry weighted labels l(i) = 1 + sum of earlier entries;
a "2" at weighted label c fuses sheets c and c+1.  Strands come in two
orientations per colour c (1 <= c <= d-1):

* ``u`` (upward): the fused region sits to its right,
* ``d`` (downward): the fused region sits to its left.

2-generators: dots (one per sheet colour 1..d), four cup/cap kinds, and
crossings of distant colours.  The rightward cup ``rcu`` and leftward cap
``lca`` enclose an unfused region; the leftward cup ``lcu`` and rightward
cap ``rca`` enclose a fused one.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

from .scalars import Grading, Unit, RingElement, parse_ring, parse_unit
from .diagrams import (
    Diagram,
    Gen,
    Layer,
    Signature,
    Strand,
    identity,
    strand_graph,
)

Lam = tuple[int, ...]


def weighted_labels(lam: Lam) -> list[int]:
    out, acc = [], 1
    for v in lam:
        out.append(acc)
        acc += v
    return out


def coord_at(lam: Lam, colour: int) -> int | None:
    """Index of the entry with weighted label ``colour``, if any."""
    for i, l in enumerate(weighted_labels(lam)):
        if l == colour:
            return i
    return None


DEFAULT_DEGREES = {
    "dot": Grading(1, 1),
    "rcu": Grading(0, -1),
    "lca": Grading(-1, 0),
    "lcu": Grading(1, 0),
    "rca": Grading(0, 1),
    "x": Grading(0, 0),
}

# leg words of the cup/cap kinds, as (kind letters of the two legs)
CUPCAP_LEGS = {
    "rcu": ("d", "u"),
    "lcu": ("u", "d"),
    "lca": ("d", "u"),
    "rca": ("u", "d"),
}


class FoamSignature(Signature):
    """Signature of the gl2 instance for a fixed parameter d."""

    def __init__(self, d: int, degrees: dict | None = None):
        assert d >= 1
        self.d = d
        self.degrees = dict(DEFAULT_DEGREES)
        if degrees:
            self.degrees.update(degrees)
        self._src_cache: dict = {}
        self._tgt_cache: dict = {}

    # ---- objects ---------------------------------------------------------

    def objects(self, max_len: int | None = None) -> Iterable[Lam]:
        """All objects, i.e. 1/2-sequences summing to d."""
        def rec(rest):
            if rest == 0:
                yield ()
            for v in (1, 2):
                if v <= rest:
                    for tail in rec(rest - v):
                        yield (v,) + tail
        yield from rec(self.d)

    def object_ok(self, lam) -> bool:
        return (
            isinstance(lam, tuple)
            and all(v in (1, 2) for v in lam)
            and sum(lam) == self.d
        )

    # ---- strands ---------------------------------------------------------

    def transport_left(self, lam: Lam, strand: Strand):
        c = strand.colour
        i = coord_at(lam, c)
        if i is None:
            return None
        if strand.kind == "u":
            # fused on the right: split 2 -> (1, 1)
            if lam[i] != 2:
                return None
            return lam[:i] + (1, 1) + lam[i + 1:]
        if strand.kind == "d":
            # unfused on the right: merge (1, 1) -> 2
            if lam[i] != 1 or i + 1 >= len(lam) or lam[i + 1] != 1:
                return None
            return lam[:i] + (2,) + lam[i + 2:]
        return None

    def strand_colours(self) -> range:
        return range(1, self.d)

    # ---- 2-generators ----------------------------------------------------

    def gen_src(self, gen: Gen) -> tuple[Strand, ...]:
        hit = self._src_cache.get(gen)
        if hit is not None:
            return hit
        k = gen.kind
        if k in ("dot", "rcu", "lcu"):
            out = ()
        elif k in ("lca", "rca"):
            a, b = CUPCAP_LEGS[k]
            out = (Strand(a, gen.colour), Strand(b, gen.colour))
        elif k == "x":
            out = gen.extra
        else:
            raise ValueError(f"unknown generator kind {k!r}")
        self._src_cache[gen] = out
        return out

    def gen_tgt(self, gen: Gen) -> tuple[Strand, ...]:
        hit = self._tgt_cache.get(gen)
        if hit is not None:
            return hit
        k = gen.kind
        if k in ("dot", "lca", "rca"):
            out = ()
        elif k in ("rcu", "lcu"):
            a, b = CUPCAP_LEGS[k]
            out = (Strand(a, gen.colour), Strand(b, gen.colour))
        elif k == "x":
            s1, s2 = gen.extra
            out = (s2, s1)
        else:
            raise ValueError(f"unknown generator kind {k!r}")
        self._tgt_cache[gen] = out
        return out

    def gen_degree(self, gen: Gen) -> Grading:
        return self.degrees[gen.kind]

    def gen_wiring(self, gen: Gen):
        k = gen.kind
        if k == "dot":
            return ()
        if k in ("rcu", "lcu"):
            return (("t0", "t1"),)
        if k in ("lca", "rca"):
            return (("s0", "s1"),)
        if k == "x":
            return (("s0", "t1"), ("s1", "t0"))
        raise ValueError(k)

    def region_ok(self, lam: Lam, gen: Gen) -> bool:
        if gen.kind != "dot":
            return True
        i = coord_at(lam, gen.colour)
        return i is not None and lam[i] == 1

    def gen_ok(self, gen: Gen) -> bool:
        """Colour-range and distance constraints, independent of regions."""
        if gen.kind == "dot":
            return 1 <= gen.colour <= self.d
        if gen.kind in CUPCAP_LEGS:
            return 1 <= gen.colour <= self.d - 1
        if gen.kind == "x":
            s1, s2 = gen.extra
            return (
                1 <= s1.colour <= self.d - 1
                and 1 <= s2.colour <= self.d - 1
                and abs(s1.colour - s2.colour) > 1
            )
        return False

    # ---- surface hooks ---------------------------------------------------

    def sheets(self, lam: Lam) -> tuple[int, ...]:
        """Weighted labels of the unfused entries: the 1-facet sheets."""
        return tuple(
            l for l, v in zip(weighted_labels(lam), lam) if v == 1
        )

    def seam_sheets(self, colour: int) -> tuple[int, int]:
        return (colour, colour + 1)

    def face_shaded(self, lam: Lam, colour: int) -> bool:
        i = coord_at(lam, colour)
        return i is not None and lam[i] == 2

    def shaded_colours(self, base: Lam) -> range:
        return range(1, self.d)

    def cupcap_shape(self, gen: Gen):
        """("cup"|"cap", inner region unfused?) for cup/cap kinds."""
        if gen.kind == "rcu":
            return ("cup", True)
        if gen.kind == "lcu":
            return ("cup", False)
        if gen.kind == "lca":
            return ("cap", True)
        if gen.kind == "rca":
            return ("cap", False)
        return None

    # ---- rewriting order ---------------------------------------------------

    def order_key(self, d: Diagram) -> tuple:
        g = strand_graph(self, d)
        sh = tuple(g.shading_count.get(c, 0) for c in range(1, self.d))
        cl = tuple(g.closed_count.get(c, 0) for c in range(1, self.d))
        dots = tuple(g.dot_count.get(c, 0) for c in range(1, self.d + 1))
        return sh + cl + dots

    def normal_form_guard(self, d: Diagram) -> bool:
        return is_reduced(self, d)


def up(c: int) -> Strand:
    return Strand("u", c)


def down(c: int) -> Strand:
    return Strand("d", c)


def dot(c: int) -> Gen:
    return Gen("dot", c)


def cup(kind: str, c: int) -> Gen:
    assert kind in ("rcu", "lcu")
    return Gen(kind, c)


def cap(kind: str, c: int) -> Gen:
    assert kind in ("rca", "lca")
    return Gen(kind, c)


def crossing(s1: Strand, s2: Strand) -> Gen:
    return Gen("x", 0, (s1, s2))


# ---------------------------------------------------------------------------
# Rule schemas
# ---------------------------------------------------------------------------

GFOAM_ZIGZAG = {"z1": "1", "z2": "X", "z3": "Z^2", "z4": "Y*Z^2"}
GFOAM_PRIME_ZIGZAG = {"z1": "1", "z2": "X", "z3": "X*Y*Z^2", "z4": "X*Z^2"}

GFOAM_RULE_SCALARS = {
    "dm": "1",
    "sq": "Z^-1",
    "bbodd_lo": "Z",
    "bbodd_hi": "X*Y*Z",
    "bbev_dotted": "1",
}


def _lay(left, gen, right):
    return Layer(tuple(left), gen, tuple(right))


def snake(variant: str, c: int, base: Lam) -> Diagram:
    """The four cup/cap snakes; sources of the zigzag moves."""
    u, dn = up(c), down(c)
    if variant == "z1":    # down-strand, leftward pair, cap left above cup
        layers = (_lay([dn], cup("lcu", c), []), _lay([], cap("lca", c), [dn]))
        word = (dn,)
    elif variant == "z2":  # up-strand, leftward pair, cup left below cap
        layers = (_lay([], cup("lcu", c), [u]), _lay([u], cap("lca", c), []))
        word = (u,)
    elif variant == "z3":  # up-strand, rightward pair
        layers = (_lay([u], cup("rcu", c), []), _lay([], cap("rca", c), [u]))
        word = (u,)
    elif variant == "z4":  # down-strand, rightward pair
        layers = (_lay([], cup("rcu", c), [dn]), _lay([dn], cap("rca", c), []))
        word = (dn,)
    else:
        raise ValueError(variant)
    return Diagram(base, word, layers)


def snake_target(variant: str, c: int, base: Lam) -> Diagram:
    word = (down(c),) if variant in ("z1", "z4") else (up(c),)
    return identity(base, word)


def circle(orientation: str, c: int, base: Lam, dotted: int | None = None) -> Diagram:
    """A closed circle; ``ccw`` = rcu/lca pair, ``cw`` = lcu/rca pair.

    ``dotted`` places a dot of that colour inside the circle.
    """
    if orientation == "ccw":
        lo, hi = cup("rcu", c), cap("lca", c)
    else:
        lo, hi = cup("lcu", c), cap("rca", c)
    layers = [_lay([], lo, [])]
    if dotted is not None:
        w = (
            (down(c), up(c)) if orientation == "ccw" else (up(c), down(c))
        )
        layers.append(_lay([w[0]], dot(dotted), [w[1]]))
    layers.append(_lay([], hi, []))
    return Diagram(base, (), tuple(layers))


class FoamRules:
    """Concrete rule instances of the gl2 ruleset for one parameter d."""

    def __init__(self, sig: FoamSignature, zigzag: dict, scalars: dict):
        self.sig = sig
        self.zigzag = {k: parse_unit(v) for k, v in zigzag.items()}
        self.scalars = {k: parse_ring(v) for k, v in scalars.items()}

    def _ambient_for_word(self, word) -> Lam | None:
        """Some object making ``word`` legal, rightmost region first."""
        sig = self.sig
        for lam in sig.objects():
            if sig.labels(lam, word) is not None:
                return lam
        return None

    def _ambient_for_dot(self, colour: int) -> Lam | None:
        for lam in self.sig.objects():
            if self.sig.region_ok(lam, dot(colour)):
                return lam
        return None

    def e_rules(self):
        """Oriented presentations of the unoriented moves, with unit scalars."""
        sig = self.sig
        out = []
        for c in sig.strand_colours():
            for v in ("z1", "z2", "z3", "z4"):
                base = self._ambient_for_word(snake_target(v, c, ()).source)
                if base is None:
                    continue
                out.append(
                    (f"{v}:{c}", snake(v, c, base), self.zigzag[v],
                     snake_target(v, c, base))
                )
        # dot slide: a dot of colour j moves across a strand of colour c
        for c in sig.strand_colours():
            for sk in ("u", "d"):
                s = Strand(sk, c)
                for j in range(1, sig.d + 1):
                    if j in (c, c + 1):
                        continue
                    base = self._ambient_for_word((s,))
                    if base is None:
                        continue
                    lhs = Diagram(base, (s,), (_lay([], dot(j), [s]),))
                    rhs = Diagram(base, (s,), (_lay([s], dot(j), []),))
                    if sig.is_legal(lhs) and sig.is_legal(rhs):
                        out.append((f"ds:{j}across{sk}{c}", lhs, None, rhs))
        # braid-like: double crossing removal
        for s1, s2 in self._distant_pairs():
            base = self._ambient_for_word((s1, s2))
            if base is None:
                continue
            lhs = Diagram(
                base, (s1, s2),
                (_lay([], crossing(s1, s2), []), _lay([], crossing(s2, s1), [])),
            )
            out.append((f"r2:{s1}{s2}", lhs, None, identity(base, (s1, s2))))
        # braid-like: Yang-Baxter for pairwise distant colours
        for s1, s2, s3 in self._distant_triples():
            base = self._ambient_for_word((s1, s2, s3))
            if base is None:
                continue
            lhs = Diagram(
                base, (s1, s2, s3),
                (
                    _lay([], crossing(s1, s2), [s3]),
                    _lay([s2], crossing(s1, s3), []),
                    _lay([], crossing(s2, s3), [s1]),
                ),
            )
            rhs = Diagram(
                base, (s1, s2, s3),
                (
                    _lay([s1], crossing(s2, s3), []),
                    _lay([], crossing(s1, s3), [s2]),
                    _lay([s3], crossing(s1, s2), []),
                ),
            )
            out.append((f"r3:{s1}{s2}{s3}", lhs, None, rhs))
        # pitchforks: a strand crosses one leg of a cap / cup
        for ck, c in itertools.product(("lca", "rca"), sig.strand_colours()):
            a, b = (Strand(k, c) for k in CUPCAP_LEGS[ck])
            for s in self._strands_distant_from(c):
                amb = self._ambient_for_word((a, s, b))
                if amb is None:
                    continue
                lhs = Diagram(
                    amb, (a, s, b),
                    (_lay([], crossing(a, s), [b]), _lay([s], cap(ck, c), [])),
                )
                rhs = Diagram(
                    amb, (a, s, b),
                    (_lay([a], crossing(s, b), []), _lay([], cap(ck, c), [s])),
                )
                out.append((f"pfcap:{ck}{c}:{s}", lhs, None, rhs))
        for ck, c in itertools.product(("rcu", "lcu"), sig.strand_colours()):
            a, b = (Strand(k, c) for k in CUPCAP_LEGS[ck])
            for s in self._strands_distant_from(c):
                amb = self._ambient_for_word((a, s, b))
                if amb is None:
                    continue
                lhs = Diagram(
                    amb, (s,),
                    (_lay([s], cup(ck, c), []), _lay([], crossing(s, a), [b])),
                )
                rhs = Diagram(
                    amb, (s,),
                    (_lay([], cup(ck, c), [s]), _lay([a], crossing(b, s), [])),
                )
                out.append((f"pfcup:{ck}{c}:{s}", lhs, None, rhs))
        return out

    def _distant_pairs(self):
        sig = self.sig
        for c1, c2 in itertools.product(sig.strand_colours(), repeat=2):
            if abs(c1 - c2) <= 1:
                continue
            for k1, k2 in itertools.product("ud", repeat=2):
                yield Strand(k1, c1), Strand(k2, c2)

    def _distant_triples(self):
        sig = self.sig
        for c1, c2, c3 in itertools.product(sig.strand_colours(), repeat=3):
            if (
                abs(c1 - c2) <= 1
                or abs(c1 - c3) <= 1
                or abs(c2 - c3) <= 1
            ):
                continue
            for k1, k2, k3 in itertools.product("ud", repeat=3):
                yield Strand(k1, c1), Strand(k2, c2), Strand(k3, c3)

    def _strands_distant_from(self, c: int):
        for c2 in self.sig.strand_colours():
            if abs(c - c2) > 1:
                for k in "ud":
                    yield Strand(k, c2)

    def r_rules(self):
        """(name, lhs, rhs terms, admissibility) for the oriented rules."""
        sig = self.sig
        one = RingElement.one()
        out = []
        for c in range(1, sig.d + 1):
            base = self._ambient_for_dot(c)
            if base is None:
                continue
            lhs = Diagram(base, (), (_lay([], dot(c), []), _lay([], dot(c), [])))
            out.append((f"dd:{c}", lhs, [], "always"))
        for c in sig.strand_colours():
            u = up(c)
            base = self._ambient_for_word((u,))
            if base is None:
                continue
            lhs = Diagram(base, (u,), (_lay([], dot(c), [u]),))
            rhs = Diagram(base, (u,), (_lay([], dot(c + 1), [u]),))
            out.append(
                (f"dm:{c}", lhs, [(self.scalars["dm"], rhs)], "always")
            )
        for c in sig.strand_colours():
            base2 = self._ambient_for_word(())
            # bubbles need an ambient in which the circle is legal
            amb_ccw = self._ambient_with_fused(c)
            if amb_ccw is not None:
                lhs = circle("ccw", c, amb_ccw, dotted=c + 1)
                out.append(
                    (f"bbev1:{c}", lhs,
                     [(self.scalars["bbev_dotted"], identity(amb_ccw))], "always")
                )
                lhs0 = circle("ccw", c, amb_ccw)
                out.append((f"bbev0:{c}", lhs0, [], "always"))
            amb_cw = self._ambient_for_dot(c)
            if amb_cw is not None and self.sig.region_ok(amb_cw, dot(c + 1)):
                lhs = circle("cw", c, amb_cw)
                rhs1 = Diagram(amb_cw, (), (_lay([], dot(c), []),))
                rhs2 = Diagram(amb_cw, (), (_lay([], dot(c + 1), []),))
                out.append(
                    (f"bbodd:{c}", lhs,
                     [(self.scalars["bbodd_lo"], rhs1),
                      (self.scalars["bbodd_hi"], rhs2)], "always")
                )
        for c in sig.strand_colours():
            dn, u = down(c), up(c)
            base = self._ambient_for_word((dn, u))
            if base is None:
                continue
            lhs = identity(base, (dn, u))
            mid_low = Diagram(
                base, (dn, u),
                (_lay([dn], dot(c), [u]), _lay([], cap("lca", c), []),
                 _lay([], cup("rcu", c), [])),
            )
            mid_high = Diagram(
                base, (dn, u),
                (_lay([], cap("lca", c), []), _lay([], cup("rcu", c), []),
                 _lay([dn], dot(c), [u])),
            )
            out.append(
                (f"nc:{c}", lhs, [(one, mid_high), (one, mid_low)],
                 "distinct_strands")
            )
        for c in sig.strand_colours():
            if c + 1 not in sig.strand_colours():
                continue
            word = (down(c), up(c + 1), down(c + 1), up(c))
            base = self._ambient_for_word(word)
            if base is None:
                continue
            lhs = identity(base, word)
            rhs = Diagram(
                base, word,
                (
                    _lay([down(c)], cap("rca", c + 1), [up(c)]),
                    _lay([], cap("lca", c), []),
                    _lay([], cup("rcu", c), []),
                    _lay([down(c)], cup("lcu", c + 1), [up(c)]),
                ),
            )
            out.append(
                (f"sq:{c}", lhs, [(self.scalars["sq"], rhs)],
                 "distinct_strands")
            )
        return out

    def _ambient_with_fused(self, c: int) -> Lam | None:
        for lam in self.sig.objects():
            i = coord_at(lam, c)
            if i is not None and lam[i] == 2:
                return lam
        return None


def is_reduced(sig: FoamSignature, d: Diagram) -> bool:
    """Whether the unshaded surface is a union of disks with at most one
    dot each, no dot sitting below a seam of its own colour.

    The dot condition rules out pending migrations: a dot of colour c can
    be carried along its disk to any c-coloured seam and pushed across.
    Equivalently to the whole test, no admissible redex remains.
    """
    g = strand_graph(sig, d)
    for comp in g.components:
        if comp.euler != 1 or len(comp.dots) > 1:
            return False
        for t in comp.dots:
            if d.layers[t].gen.colour in comp.seam_colours:
                return False
    return True


def random_diagram(
    sig: FoamSignature,
    rng: random.Random,
    max_gens: int = 10,
    allow_dots: bool = True,
) -> Diagram:
    """A random legal diagram, grown by stacking random legal layers."""
    base = rng.choice(list(sig.objects()))
    word: tuple[Strand, ...] = ()
    # random legal starting word
    for _ in range(rng.randrange(0, 4)):
        cands = []
        for c in sig.strand_colours():
            for k in "ud":
                s = Strand(k, c)
                if sig.labels(base, (s,) + word) is not None:
                    cands.append(s)
        if not cands:
            break
        word = (rng.choice(cands),) + word
    d = identity(base, word)
    for _ in range(max_gens):
        w = sig.target(d)
        labs = sig.labels(base, w)
        moves = []
        for g in range(len(w) + 1):
            for c in sig.strand_colours():
                for ck in ("rcu", "lcu"):
                    gen = cup(ck, c)
                    cand = Layer(w[:g], gen, w[g:])
                    if sig.labels(base, w[:g] + sig.gen_tgt(gen) + w[g:]):
                        moves.append(cand)
            if allow_dots:
                for c in range(1, sig.d + 1):
                    if sig.region_ok(labs[g], dot(c)):
                        moves.append(Layer(w[:g], dot(c), w[g:]))
        for g in range(len(w) - 1):
            pair = (w[g], w[g + 1])
            for ck in ("lca", "rca"):
                gen = Gen(ck, pair[0].colour)
                if sig.gen_src(gen) == pair:
                    moves.append(Layer(w[:g], gen, w[g + 2:]))
            if abs(w[g].colour - w[g + 1].colour) > 1:
                moves.append(Layer(w[:g], crossing(*pair), w[g + 2:]))
        if not moves:
            break
        lay = rng.choice(moves)
        d = Diagram(base, d.source, d.layers + (lay,))
    return d
