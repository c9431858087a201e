"""
Layered string diagrams over a signature.

A diagram is a bottom-to-top list of layers, each consisting of a single
2-generator whiskered on both sides by 1-cells (strands).  Horizontal
simultaneity is never represented: exchanging the heights of two
generators is an explicit move handled by :mod:`grayrew.modulo`.  Region
labels are never stored; they are recomputed from the label of the
rightmost region (the base object), reading words right to left.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Hashable, Iterable, NamedTuple, Sequence

from .scalars import Grading, ZERO_DEG

Obj = Hashable


class DiagramError(Exception):
    pass


class BoundaryMismatch(DiagramError):
    pass


class IllegalDiagram(DiagramError):
    pass


class Strand(NamedTuple):
    """A 1-generator instance: orientation kind plus colour."""

    kind: str
    colour: int = 0

    def __str__(self):
        return f"{self.kind}{self.colour}" if self.colour else self.kind


class Gen(NamedTuple):
    """A 2-generator instance.

    ``extra`` holds strand parameters for families like crossings, whose
    boundary depends on the strands being swapped.
    """

    kind: str
    colour: int = 0
    extra: tuple = ()

    def __str__(self):
        base = f"{self.kind}:{self.colour}" if self.colour else self.kind
        if self.extra:
            base += "[" + ",".join(str(s) for s in self.extra) + "]"
        return base


class Layer(NamedTuple):
    left: tuple[Strand, ...]
    gen: Gen
    right: tuple[Strand, ...]

    @property
    def pos(self) -> int:
        """Word index at which the generator sits."""
        return len(self.left)


class Diagram(NamedTuple):
    base: Obj
    source: tuple[Strand, ...]
    layers: tuple[Layer, ...]

    def __str__(self):
        src = " ".join(str(s) for s in self.source) or "-"
        body = " ; ".join(
            f"{' '.join(map(str, l.left))}|{l.gen}|{' '.join(map(str, l.right))}"
            for l in self.layers
        )
        return f"[{self.base} : {src} : {body or 'id'}]"


def identity(base: Obj, word: Sequence[Strand] = ()) -> Diagram:
    """The identity 2-cell on a 1-word (zero layers)."""
    return Diagram(base, tuple(word), ())


class Signature:
    """Behaviour of the generators of a presented 2-sesquicategory.

    Subclasses supply the boundary, degree, wiring and region rules for
    each generator kind.  Everything else (composition, legality, strand
    tracing) is generic.
    """

    # degree reduction: (0, 0) means plain Z^2
    degree_mod: tuple[int, int] = (0, 0)

    def gen_src(self, gen: Gen) -> tuple[Strand, ...]:
        raise NotImplementedError

    def gen_tgt(self, gen: Gen) -> tuple[Strand, ...]:
        raise NotImplementedError

    def gen_degree(self, gen: Gen) -> Grading:
        raise NotImplementedError

    def gen_wiring(self, gen: Gen) -> tuple[tuple[str, str], ...]:
        """Pairs of leg ids ("s0", "t1", ...) joined inside the generator.

        Legs absent from the wiring pass straight through is not an
        option: every leg must appear in exactly one pair.
        """
        raise NotImplementedError

    def transport_left(self, obj: Obj, strand: Strand) -> Obj | None:
        """Label of the region to the left of a strand, or None if illegal."""
        raise NotImplementedError

    def region_ok(self, obj: Obj, gen: Gen) -> bool:
        """Constraint on the label of the region a 0-boundary generator sits in."""
        return True

    def strand_ok(self, obj: Obj, strand: Strand) -> bool:
        return self.transport_left(obj, strand) is not None

    # -- generic machinery ------------------------------------------------

    def reduce_degree(self, d: Grading) -> Grading:
        return d.reduce(self.degree_mod)

    def words(self, d: Diagram) -> list[tuple[Strand, ...]]:
        """The 1-words at every horizontal line, bottom to top."""
        out = [d.source]
        w = d.source
        for lay in d.layers:
            src = self.gen_src(lay.gen)
            expect = lay.left + src + lay.right
            if expect != w:
                raise BoundaryMismatch(
                    f"layer {lay.gen} expects word {expect}, found {w}"
                )
            w = lay.left + self.gen_tgt(lay.gen) + lay.right
            out.append(w)
        return out

    def target(self, d: Diagram) -> tuple[Strand, ...]:
        return self.words(d)[-1]

    def labels(self, base: Obj, word: Sequence[Strand]) -> list[Obj] | None:
        """Region labels at the len(word)+1 gaps, leftmost first.

        Returns None if some strand is illegal over its right label.
        """
        out = [base]
        for s in reversed(word):
            nxt = self.transport_left(out[-1], s)
            if nxt is None:
                return None
            out.append(nxt)
        out.reverse()
        return out

    def is_legal(self, d: Diagram) -> bool:
        try:
            self.check_legal(d)
        except DiagramError:
            return False
        return True

    def check_legal(self, d: Diagram) -> None:
        words = self.words(d)
        for w in words:
            labs = self.labels(d.base, w)
            if labs is None:
                raise IllegalDiagram(f"illegal word {w} over {d.base}")
        for lay, w in zip(d.layers, words):
            if not self.gen_src(lay.gen):
                labs = self.labels(d.base, w)
                if not self.region_ok(labs[lay.pos], lay.gen):
                    raise IllegalDiagram(
                        f"{lay.gen} not allowed in region {labs[lay.pos]}"
                    )

    def degree(self, d: Diagram) -> Grading:
        total = ZERO_DEG
        for lay in d.layers:
            total = total + self.gen_degree(lay.gen)
        return self.reduce_degree(total)

    # -- composition -------------------------------------------------------

    def compose(self, lower: Diagram, upper: Diagram) -> Diagram:
        """Vertical composition, ``lower`` then ``upper``."""
        if lower.base != upper.base or self.target(lower) != upper.source:
            raise BoundaryMismatch("vertical composition boundary mismatch")
        return Diagram(lower.base, lower.source, lower.layers + upper.layers)

    def whisker(
        self, left: Sequence[Strand], d: Diagram, right: Sequence[Strand],
        base: Obj | None = None,
    ) -> Diagram:
        """Whisker a diagram on both sides.

        The base object must be supplied when whiskering on the right, as
        the rightmost region changes.
        """
        left, right = tuple(left), tuple(right)
        if base is None:
            if right:
                raise BoundaryMismatch("right whiskering requires a base object")
            base = d.base
        else:
            labs = self.labels(base, right)
            if labs is None or labs[0] != d.base:
                raise BoundaryMismatch("right whisker does not reach the base object")
        layers = tuple(
            Layer(left + l.left, l.gen, l.right + right) for l in d.layers
        )
        return Diagram(base, left + d.source + right, layers)


@dataclasses.dataclass(frozen=True)
class Context:
    """A hole surrounded by 1-cells and 2-cells: below * (l ( ) r) * above."""

    left1: tuple[Strand, ...]
    right1: tuple[Strand, ...]
    below: Diagram
    above: Diagram

    def apply(self, sig: Signature, d: Diagram) -> Diagram:
        mid = sig.whisker(self.left1, d, self.right1, base=self.below.base)
        return sig.compose(sig.compose(self.below, mid), self.above)


def trivial_context(sig: Signature, d: Diagram) -> Context:
    top = identity(d.base, sig.target(d))
    return Context((), (), identity(d.base, d.source), top)


# ---------------------------------------------------------------------------
# Strand tracing, faces and surface data
# ---------------------------------------------------------------------------

# A point on a horizontal line: (line index, word position).
Point = tuple[int, int]


class StrandInfo(NamedTuple):
    colour: int
    kind_at_legs: tuple
    closed: bool
    points: tuple[Point, ...]  # every (line, position) the strand crosses


class FaceInfo(NamedTuple):
    label: Obj
    slots: tuple[tuple[int, int], ...]  # (line, gap) slots in this face


class SurfaceComponent(NamedTuple):
    euler: int
    dots: tuple[int, ...]       # dot layer indices living on this component
    sheets: tuple[tuple[int, int, int], ...]  # (line, gap, sheet-label) pieces
    seam_colours: tuple[int, ...]             # strand colours of internal seams


class StrandGraph(NamedTuple):
    strands: tuple[StrandInfo, ...]
    faces: tuple[FaceInfo, ...]
    dots: tuple[tuple[int, int, int], ...]   # (layer, colour, face index)
    # per-colour counters; colours are keys since ranges differ by signature
    shading_count: dict
    closed_count: dict
    dot_count: dict
    components: tuple[SurfaceComponent, ...]


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, a):
        p = self.parent.setdefault(a, a)
        while p != self.parent[p]:
            self.parent[p] = self.parent[self.parent[p]]
            p = self.parent[p]
        self.parent[a] = p
        return p

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def groups(self):
        out: dict = {}
        for a in list(self.parent):
            out.setdefault(self.find(a), []).append(a)
        return out


def strand_graph(sig: Signature, d: Diagram) -> StrandGraph:
    """Trace strands, planar faces and the unshaded surface of a diagram."""
    cache = getattr(sig, "_sg_cache", None)
    if cache is None:
        cache = {}
        sig._sg_cache = cache
    hit = cache.get(d)
    if hit is not None:
        return hit
    out = _strand_graph(sig, d)
    if len(cache) < 200000:
        cache[d] = out
    return out


def _strand_graph(sig: Signature, d: Diagram) -> StrandGraph:
    sig.check_legal(d)
    words = sig.words(d)
    n = len(d.layers)

    # --- strands: union points (line, pos) along each strand -------------
    pts = _UnionFind()
    for t, lay in enumerate(d.layers):
        a = lay.pos
        src, tgt = sig.gen_src(lay.gen), sig.gen_tgt(lay.gen)
        # whiskered positions pass through
        for p in range(a):
            pts.union((t, p), (t + 1, p))
        for p in range(a + len(src), len(words[t])):
            pts.union((t, p), (t + 1, p - len(src) + len(tgt)))
        # internal wiring
        legs = {}
        for j in range(len(src)):
            legs[f"s{j}"] = (t, a + j)
        for j in range(len(tgt)):
            legs[f"t{j}"] = (t + 1, a + j)
        for u, v in sig.gen_wiring(lay.gen):
            pts.union(legs[u], legs[v])

    groups = pts.groups()
    # make sure isolated boundary points exist even with no layers
    for p in range(len(words[0])):
        pts.find((0, p))
    for p in range(len(words[-1])):
        pts.find((n, p))
    groups = pts.groups()

    boundary = set()
    for p in range(len(words[0])):
        boundary.add((0, p))
    for p in range(len(words[-1])):
        boundary.add((n, p))

    strands = []
    point_strand: dict[Point, int] = {}
    for root, members in sorted(groups.items()):
        members = sorted(members)
        line, pos = members[0]
        colour = words[line][pos].colour
        closed = not any(m in boundary for m in members)
        idx = len(strands)
        for m in members:
            point_strand[m] = idx
        strands.append(StrandInfo(colour, (), closed, tuple(members)))

    # --- planar faces: union slots (line, gap) ---------------------------
    faces = _UnionFind()
    for t, lay in enumerate(d.layers):
        a = lay.pos
        m = len(sig.gen_src(lay.gen))
        k = len(sig.gen_tgt(lay.gen))
        for g in range(a + 1):
            faces.union((t, g), (t + 1, g))
        for g in range(a + m, len(words[t]) + 1):
            faces.union((t, g), (t + 1, g - m + k))
        # outer gaps around the generator connect to each other through
        # the generic rule above (g = a and g = a + m).
    for t in range(n + 1):
        for g in range(len(words[t]) + 1):
            faces.find((t, g))

    face_groups = faces.groups()
    face_index: dict[tuple[int, int], int] = {}
    face_list: list[FaceInfo] = []
    for root, slots in sorted(face_groups.items()):
        slots = sorted(slots)
        t, g = slots[0]
        labs = sig.labels(d.base, words[t])
        idx = len(face_list)
        for s in slots:
            face_index[s] = idx
        face_list.append(FaceInfo(labs[g], tuple(slots)))

    # --- dots --------------------------------------------------------------
    dots = []
    for t, lay in enumerate(d.layers):
        if not sig.gen_src(lay.gen) and not sig.gen_tgt(lay.gen):
            dots.append((t, lay.gen.colour, face_index[(t, lay.pos)]))

    # --- counters ----------------------------------------------------------
    shading: dict[int, int] = {}
    closed_cnt: dict[int, int] = {}
    dot_cnt: dict[int, int] = {}
    for s in strands:
        if s.closed:
            closed_cnt[s.colour] = closed_cnt.get(s.colour, 0) + 1
    for _, colour, _ in dots:
        dot_cnt[colour] = dot_cnt.get(colour, 0) + 1

    shaded = getattr(sig, "shaded_colours", None)
    if shaded is not None:
        # per colour, merge shaded faces across edges of other colours
        for colour in shaded(d.base):
            comp = _UnionFind()
            relevant = [
                i for i, f in enumerate(face_list) if sig.face_shaded(f.label, colour)
            ]
            for i in relevant:
                comp.find(i)
            # adjacency across strand points: the strand at (t, p) separates
            # gap p and gap p+1 at both adjacent lines
            for t in range(n + 1):
                for p in range(len(words[t])):
                    if words[t][p].colour == colour:
                        continue
                    fa = face_index[(t, p)]
                    fb = face_index[(t, p + 1)]
                    if fa in relevant and fb in relevant:
                        comp.union(fa, fb)
            cnt = len({comp.find(i) for i in relevant})
            if cnt:
                shading[colour] = cnt

    components = _surface_components(sig, d, words, face_index, face_list, dots)

    return StrandGraph(
        tuple(strands),
        tuple(face_list),
        tuple(dots),
        shading,
        closed_cnt,
        dot_cnt,
        components,
    )


def _surface_components(sig, d, words, face_index, face_list, dots):
    """Components of the unshaded surface with Euler characteristics.

    Pieces are (face, sheet) pairs for unfused sheets; they glue along
    seams (strand edges, joining the two sheets flanking the seam on its
    unfused side) and across edges whose strand does not affect the sheet.
    Euler characteristic is computed by Morse counting: cup and cap points
    contribute +1 (circle births/deaths) or -1 (saddles) depending on
    whether their inner region is unfused, and each interval of the bottom
    cross-section contributes +1.
    """
    sheet_of = getattr(sig, "sheets", None)
    if sheet_of is None:
        return ()
    seam = getattr(sig, "seam_sheets")  # colour -> (sheet, sheet)

    n = len(d.layers)
    uf = _UnionFind()

    def piece(t, g, s):
        return (face_index[(t, g)], s)

    # sheet pieces exist for every (face, sheet unfused on its label)
    for i, f in enumerate(face_list):
        for s in sheet_of(f.label):
            uf.find((i, s))

    # gluing across strand edges at every line
    seam_pieces = []
    for t in range(n + 1):
        labs = sig.labels(d.base, words[t])
        for p, strand in enumerate(words[t]):
            lo, hi = seam(strand.colour)
            left, right = labs[p], labs[p + 1]
            lsheets, rsheets = set(sheet_of(left)), set(sheet_of(right))
            for s in lsheets & rsheets:
                uf.union(piece(t, p, s), piece(t, p + 1, s))
            # the seam joins the two sheets on the unfused side
            if lo in lsheets and hi in lsheets:
                uf.union(piece(t, p, lo), piece(t, p, hi))
                seam_pieces.append((piece(t, p, lo), strand.colour))
            else:
                uf.union(piece(t, p + 1, lo), piece(t, p + 1, hi))
                seam_pieces.append((piece(t, p + 1, lo), strand.colour))

    # Morse contributions of cup/cap points
    chi: dict = {}

    def add(key, val):
        chi[key] = chi.get(key, 0) + val

    for t, lay in enumerate(d.layers):
        shape = getattr(sig, "cupcap_shape", lambda g: None)(lay.gen)
        if shape is None:
            continue
        kind, inner_unfused = shape
        a = lay.pos
        lo, _ = seam(lay.gen.colour)
        if kind == "cup":
            inner = face_index[(t + 1, a + 1)]
            outer = face_index[(t, a)]
            if inner_unfused:
                add(uf.find((inner, lo)), +1)       # circle birth
            else:
                add(uf.find((outer, lo)), -1)       # saddle
        else:  # cap
            inner = face_index[(t, a + 1)]
            outer = face_index[(t + 1, a)]
            if inner_unfused:
                add(uf.find((inner, lo)), +1)       # circle death
            else:
                add(uf.find((outer, lo)), -1)       # saddle

    # Bottom cross-section: sheet pieces over the bottom gaps, joined at
    # strand feet (persisting sheets pass through; at a seam foot the two
    # flanking sheets join on the unfused side).  Components touching the
    # outer frame are intervals and contribute +1 each; bare circles
    # contribute nothing.
    for comp, cnt in _cross_section(sig, d.base, words[0], 0, face_index, uf).items():
        chi[comp] = chi.get(comp, 0) + cnt

    # collect components
    comp_pieces: dict = {}
    for (i, s), _ in list(uf.parent.items()):
        root = uf.find((i, s))
        for (t, g) in face_list[i].slots[:1]:
            comp_pieces.setdefault(root, []).append((t, g, s))

    comp_dots: dict = {}
    for (t, colour, fi) in dots:
        root = uf.find((fi, colour))
        comp_dots.setdefault(root, []).append(t)

    comp_seams: dict = {}
    for pc, colour in seam_pieces:
        comp_seams.setdefault(uf.find(pc), set()).add(colour)

    out = []
    for root in sorted(comp_pieces):
        out.append(
            SurfaceComponent(
                chi.get(root, 0),
                tuple(sorted(comp_dots.get(root, []))),
                tuple(sorted(comp_pieces[root])),
                tuple(sorted(comp_seams.get(root, ()))),
            )
        )
    return tuple(out)


def _cross_section(sig, base, word, line, face_index, uf):
    """Morse contribution of the bottom boundary: +1 per interval component."""
    sheet_of = sig.sheets
    seam = sig.seam_sheets
    labs = sig.labels(base, word)
    cross = _UnionFind()
    for g in range(len(word) + 1):
        for s in sheet_of(labs[g]):
            cross.find((g, s))
    for p, strand in enumerate(word):
        lo, hi = seam(strand.colour)
        lsheets = set(sheet_of(labs[p]))
        rsheets = set(sheet_of(labs[p + 1]))
        for s in lsheets & rsheets:
            cross.union((p, s), (p + 1, s))
        if lo in lsheets and hi in lsheets:
            cross.union((p, lo), (p, hi))
        else:
            cross.union((p + 1, lo), (p + 1, hi))
    contrib: dict = {}
    last = len(word)
    for group in cross.groups().values():
        touches_frame = any(g == 0 or g == last for g, _ in group)
        if touches_frame:
            g, s = group[0]
            comp = uf.find((face_index[(line, g)], s))
            contrib[comp] = contrib.get(comp, 0) + 1
    return contrib


def order_counters(sig: Signature, d: Diagram) -> tuple:
    """Generic order key hook; signatures override via ``order_key``."""
    key = getattr(sig, "order_key", None)
    if key is not None:
        return key(d)
    return (len(d.layers),)
