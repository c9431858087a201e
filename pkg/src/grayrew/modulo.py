"""
The congruence engine for the unoriented moves.

Moves come in two flavours: exchanges of adjacent layers with disjoint
horizontal extents (priced by the degree pairing) and the loaded E-rules
(zigzags, slide moves, braid-like moves), applied in either direction.
Diagrams are compared through a deterministic exchange-canonical form;
deciding congruence is a budgeted bidirectional search over canonical
representatives, producing replayable witnesses.

Scalar convention: every primitive move m maps a diagram d to (d', u)
such that d = u * d' holds in the presented category.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple, Sequence

from .scalars import ONE, Unit
from .diagrams import Diagram, Gen, Layer, Strand, strand_graph
from .polygraph import RewriteRule, Ruleset


class MoveError(Exception):
    pass


class NotALoop(Exception):
    pass


# ---------------------------------------------------------------------------
# Primitive moves
# ---------------------------------------------------------------------------

class Swap(NamedTuple):
    layer: int


class RuleMove(NamedTuple):
    rule: str
    direction: int     # +1: lhs -> rhs, -1: rhs -> lhs
    layer: int         # start layer of the replaced block (or insertion line)
    offset: int        # left-whisker length of the match


Move = "Swap | RuleMove"


@dataclasses.dataclass(frozen=True)
class EMove:
    """Public description of a single unoriented move."""

    kind: str          # "interchange" or the rule name
    direction: int
    layer: int
    anchor: int
    scalar: Unit

    def to_json(self):
        return {
            "kind": self.kind,
            "dir": self.direction,
            "layer": self.layer,
            "anchor": self.anchor,
            "scalar": str(self.scalar),
        }


def _layer_spans(sig, lower: Layer, upper: Layer):
    """Spans of two adjacent layers in their common word."""
    a = lower.pos
    n = len(sig.gen_tgt(lower.gen))
    b = upper.pos
    m = len(sig.gen_src(upper.gen))
    return a, n, b, m


def can_swap(sig, d: Diagram, k: int) -> bool:
    if not (0 <= k < len(d.layers) - 1):
        return False
    a, n, b, m = _layer_spans(sig, d.layers[k], d.layers[k + 1])
    return b + m <= a or a + n <= b


def swap(ruleset: Ruleset, d: Diagram, k: int) -> tuple[Diagram, Unit]:
    """Exchange layers k and k+1; returns (d', u) with d = u * d'."""
    sig = ruleset.signature
    lower, upper = d.layers[k], d.layers[k + 1]
    a, n, b, m = _layer_spans(sig, lower, upper)
    w0 = lower.left + sig.gen_src(lower.gen) + lower.right
    m_low = len(sig.gen_src(lower.gen))
    if b + m <= a:
        b_new = b
    elif a + n <= b:
        b_new = b - n + m_low
    else:
        raise MoveError(f"layers {k}, {k + 1} overlap")
    upper2 = Layer(w0[:b_new], upper.gen, w0[b_new + m:])
    w1 = w0[:b_new] + sig.gen_tgt(upper.gen) + w0[b_new + m:]
    shift = len(sig.gen_tgt(upper.gen)) - m
    a_new = a + shift if b_new < a or (b_new == a and b + m <= a) else a
    lower2 = Layer(w1[:a_new], lower.gen, w1[a_new + m_low:])
    layers = d.layers[:k] + (upper2, lower2) + d.layers[k + 2:]
    u = ruleset.exchange_scalar(upper.gen, lower.gen)
    return Diagram(d.base, d.source, layers), u


def _rule_sides(rule: RewriteRule, direction: int) -> tuple[Diagram, Diagram, Unit]:
    """(matched side, replacement side, witness scalar) for a monomial rule."""
    scal = rule.monomial_scalar
    if scal is None:
        raise MoveError(f"rule {rule.name} is not monomial")
    rhs = rule.rhs[0][1]
    if direction > 0:
        return rule.lhs, rhs, scal
    return rhs, rule.lhs, scal.inverse()


def apply_rule_move(
    ruleset: Ruleset, d: Diagram, move: RuleMove
) -> tuple[Diagram, Unit]:
    rule = ruleset_rule(ruleset, move.rule)
    pat, rep, u = _rule_sides(rule, move.direction)
    d2 = replace_block(ruleset.signature, d, pat, rep, move.layer, move.offset)
    return d2, u


def replace_block(
    sig, d: Diagram, pat: Diagram, rep: Diagram, start: int, offset: int
) -> Diagram:
    """Replace a matched occurrence of ``pat`` by ``rep`` at (start, offset)."""
    m = len(pat.layers)
    words = sig.words(d)
    if start < 0 or start + m > len(d.layers) + (1 if m == 0 else 0):
        raise MoveError("block out of range")
    if m == 0:
        if start > len(d.layers):
            raise MoveError("insertion line out of range")
        host_word = words[start]
    else:
        host_word = words[start]
    k = len(pat.source)
    wl = host_word[:offset]
    if host_word[offset:offset + k] != pat.source:
        raise MoveError(f"pattern source does not match at {start}, {offset}")
    wr = host_word[offset + k:]
    # verify the matched block
    for j in range(m):
        lay = d.layers[start + j]
        pl = pat.layers[j]
        if (
            lay.gen != pl.gen
            or lay.left != wl + pl.left
            or lay.right != pl.right + wr
        ):
            raise MoveError(f"pattern layer {j} does not match at {start}")
    new_layers = tuple(
        Layer(wl + q.left, q.gen, q.right + wr) for q in rep.layers
    )
    layers = d.layers[:start] + new_layers + d.layers[start + m:]
    return Diagram(d.base, d.source, layers)


def ruleset_rule(ruleset: Ruleset, name: str) -> RewriteRule:
    cache = getattr(ruleset, "_rule_index", None)
    if cache is None:
        cache = {r.name: r for r in ruleset.rules_r + ruleset.rules_e}
        ruleset._rule_index = cache
    return cache[name]


def apply_move(ruleset: Ruleset, d: Diagram, move) -> tuple[Diagram, Unit]:
    if isinstance(move, Swap):
        return swap(ruleset, d, move.layer)
    return apply_rule_move(ruleset, d, move)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

def line_matches(sig, d: Diagram, source: tuple[Strand, ...], words=None):
    """Positions (line, offset) where a 0-layer pattern's word occurs."""
    words = words or sig.words(d)
    k = len(source)
    for t, w in enumerate(words):
        for p in range(len(w) - k + 1):
            if w[p:p + k] == source:
                yield t, p


def block_matches(sig, d: Diagram, pat: Diagram, words=None):
    """Contiguous matches of a layered pattern: (start, offset) pairs."""
    m = len(pat.layers)
    if m == 0:
        yield from line_matches(sig, d, pat.source, words)
        return
    n = len(d.layers)
    for start in range(n - m + 1):
        first = d.layers[start]
        p0 = pat.layers[0]
        if first.gen != p0.gen:
            continue
        if len(first.left) < len(p0.left) or len(first.right) < len(p0.right):
            continue
        off = len(first.left) - len(p0.left)
        if first.left[off:] != p0.left or (
            len(p0.right) and first.right[:len(p0.right)] != p0.right
        ):
            continue
        wl = first.left[:off]
        wr = first.right[len(p0.right):]
        ok = True
        for j in range(1, m):
            lay = d.layers[start + j]
            pl = pat.layers[j]
            if (
                lay.gen != pl.gen
                or lay.left != wl + pl.left
                or lay.right != pl.right + wr
            ):
                ok = False
                break
        if ok:
            yield start, off


def aligned_matches(sig, d: Diagram, pat: Diagram, max_skip: int = 6):
    """Matches of ``pat`` up to exchanges pushing disjoint layers above.

    Yields (swap moves, start, offset): after performing the swaps the
    pattern occurs contiguously at (start, offset).  Interleaved layers
    are only skipped when they live entirely in the whisker zones.
    """
    m = len(pat.layers)
    if m == 0:
        yield from (((), t, p) for t, p in line_matches(sig, d, pat.source))
        return

    wcache = getattr(sig, "_pat_width", None)
    if wcache is None:
        wcache = {}
        sig._pat_width = wcache
    max_width = wcache.get(pat)
    if max_width is None:
        max_width = max(len(w) for w in sig.words(pat))
        wcache[pat] = max_width

    n = len(d.layers)
    for start in range(n):
        first = d.layers[start]
        p0 = pat.layers[0]
        if first.gen != p0.gen or len(first.left) < len(p0.left):
            continue
        off = len(first.left) - len(p0.left)
        if first.left[off:] != p0.left:
            continue
        if first.right[:len(p0.right)] != p0.right:
            continue
        cur_off = off
        matched = [start]
        skipped: list[int] = []
        need = 1
        j = start + 1
        ok = m == 1
        while need < m and j <= n - 1 and len(skipped) <= max_skip:
            lay = d.layers[j]
            pl = pat.layers[need]
            exp_left_len = cur_off + len(pl.left)
            if (
                lay.gen == pl.gen
                and len(lay.left) == exp_left_len
                and lay.left[cur_off:] == pl.left
                and lay.right[:len(pl.right)] == pl.right
            ):
                matched.append(j)
                need += 1
                if need == m:
                    ok = True
                    break
            else:
                a = lay.pos
                span = max(
                    len(sig.gen_src(lay.gen)), len(sig.gen_tgt(lay.gen))
                )
                if a + span <= cur_off:
                    # entirely in the left whisker: skip; offsets shift
                    skipped.append(j)
                    cur_off += len(sig.gen_tgt(lay.gen)) - len(
                        sig.gen_src(lay.gen)
                    )
                elif a >= cur_off + max_width:
                    skipped.append(j)
                else:
                    break
            j += 1
        if not ok:
            continue
        if not skipped:
            yield (), start, off
            continue
        # bubble matched layers down past the skipped ones
        moves = []
        order = sorted(matched)
        # positions of matched layers among the block, bottom to top
        layout = sorted(matched + skipped)
        sim = layout[:]
        target = start
        for mi in order:
            pos = sim.index(mi)
            dest = target - start
            while pos > dest:
                moves.append(Swap(start + pos - 1))
                sim[pos - 1], sim[pos] = sim[pos], sim[pos - 1]
                pos -= 1
            target += 1
        yield tuple(moves), start, off


def rule_matches(ruleset: Ruleset, d: Diagram, rule: RewriteRule, direction: int):
    """Aligned matches of a rule side; backwards only for monomial rules."""
    if direction > 0:
        pat = rule.lhs
    else:
        pat, _, _ = _rule_sides(rule, direction)
    sig = ruleset.signature
    for swaps, start, off in aligned_matches(sig, d, pat):
        yield swaps, RuleMove(rule.name, direction, start, off)


# ---------------------------------------------------------------------------
# Exchange-canonical form
# ---------------------------------------------------------------------------

def _layer_key(lay: Layer):
    return (lay.pos, lay.gen.kind, lay.gen.colour, lay.gen.extra)


def canonical_with_moves(ruleset: Ruleset, d: Diagram):
    """Exchange-only normal form with its move trail; d = u * canonical."""
    sig = ruleset.signature
    cur = d
    unit = ONE
    moves = []
    n = len(cur.layers)
    guard = n * n + 10
    changed = True
    while changed and guard:
        changed = False
        guard -= 1
        for k in range(len(cur.layers) - 1):
            if not can_swap(sig, cur, k):
                continue
            nxt, u = swap(ruleset, cur, k)
            if _layer_key(nxt.layers[k]) < _layer_key(cur.layers[k]):
                cur, unit = nxt, unit * u
                moves.append(Swap(k))
                changed = True
    if guard == 0:
        raise MoveError("canonicalization did not stabilize")
    return cur, unit, tuple(moves)


class _CanonCache:
    """Per-ruleset memo for canonical forms and their move trails."""

    def __init__(self, ruleset: Ruleset):
        self.ruleset = ruleset
        self.memo: dict[Diagram, tuple[Diagram, Unit, tuple]] = {}

    def full(self, d: Diagram) -> tuple[Diagram, Unit, tuple]:
        hit = self.memo.get(d)
        if hit is None:
            hit = canonical_with_moves(self.ruleset, d)
            if len(self.memo) < 400000:
                self.memo[d] = hit
                if not hit[2]:
                    pass
                elif len(self.memo) < 400000:
                    # a canonical form is its own fixpoint
                    self.memo.setdefault(hit[0], (hit[0], ONE, ()))
        return hit

    def __call__(self, d: Diagram) -> tuple[Diagram, Unit]:
        c, u, _ = self.full(d)
        return c, u


def canonical(ruleset: Ruleset, d: Diagram) -> tuple[Diagram, Unit]:
    return canonicalizer(ruleset)(d)


def canonicalizer(ruleset: Ruleset) -> _CanonCache:
    cache = getattr(ruleset, "_canon_cache", None)
    if cache is None:
        cache = _CanonCache(ruleset)
        ruleset._canon_cache = cache
    return cache


# ---------------------------------------------------------------------------
# Neighbour generation and witnesses
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class CongruenceWitness:
    """A replayable trail of moves with its accumulated scalar."""

    source: Diagram
    moves: tuple = ()
    scalar: Unit = ONE
    target: Diagram | None = None

    def to_json(self):
        out = []
        for mv in self.moves:
            if isinstance(mv, Swap):
                out.append({"kind": "interchange", "layer": mv.layer})
            else:
                out.append(
                    {
                        "kind": "rule",
                        "rule": mv.rule,
                        "dir": mv.direction,
                        "layer": mv.layer,
                        "offset": mv.offset,
                    }
                )
        return {"moves": out, "scalar": str(self.scalar)}


def witness_moves_from_json(data) -> tuple:
    out = []
    for mv in data["moves"]:
        if mv["kind"] == "interchange":
            out.append(Swap(mv["layer"]))
        else:
            out.append(
                RuleMove(mv["rule"], mv["dir"], mv["layer"], mv["offset"])
            )
    return tuple(out)


def replay(ruleset: Ruleset, source: Diagram, moves: Sequence) -> tuple[Diagram, Unit]:
    d, u = source, ONE
    for mv in moves:
        d, step = apply_move(ruleset, d, mv)
        u = u * step
    return d, u


def verify_witness(ruleset: Ruleset, w: CongruenceWitness) -> bool:
    d, u = replay(ruleset, w.source, w.moves)
    if u != w.scalar:
        return False
    return w.target is None or d == w.target


def e_neighbors(ruleset: Ruleset, d: Diagram):
    """All single unoriented moves applicable to d.

    Returns a list of (EMove, unit, diagram); d = unit * diagram.
    """
    sig = ruleset.signature
    out = []
    for k in range(len(d.layers) - 1):
        if can_swap(sig, d, k):
            d2, u = swap(ruleset, d, k)
            out.append(
                (EMove("interchange", +1, k, d.layers[k + 1].pos, u), u, d2)
            )
    for rule in ruleset.rules_e:
        for direction in (+1, -1):
            pat, _, _ = _rule_sides(rule, direction)
            for start, off in block_matches(sig, d, pat):
                mv = RuleMove(rule.name, direction, start, off)
                d2, u = apply_rule_move(ruleset, d, mv)
                out.append((EMove(rule.name, direction, start, off, u), u, d2))
    return out


def _class_invariants(ruleset: Ruleset, d: Diagram):
    cache = getattr(ruleset, "_inv_cache", None)
    if cache is None:
        cache = {}
        ruleset._inv_cache = cache
    hit = cache.get(d)
    if hit is not None:
        return hit
    sig = ruleset.signature
    g = strand_graph(sig, d)
    # boundary pairing: moves never change which boundary points a strand
    # connects; positions at the boundary lines are fixed
    nlines = len(d.layers)
    pairing = []
    for s in g.strands:
        if s.closed:
            continue
        ends = []
        for (line, pos) in s.points:
            if line == 0:
                ends.append(("src", pos))
            if line == nlines:
                ends.append(("tgt", pos))
        pairing.append((s.colour, tuple(sorted(ends))))
    dots = tuple(sorted(g.dot_count.items()))
    closed = tuple(sorted(g.closed_count.items()))
    # surface fingerprint: isotopies preserve the unshaded surface, so the
    # multiset of (euler char, dot colours) over components is invariant
    surf = tuple(
        sorted(
            (
                c.euler,
                tuple(sorted(d.layers[t].gen.colour for t in c.dots)),
            )
            for c in g.components
        )
    )
    inv = (
        d.base,
        d.source,
        sig.target(d),
        sig.degree(d),
        dots,
        closed,
        tuple(sorted(pairing)),
        surf,
    )
    if len(cache) < 200000:
        cache[d] = inv
    return inv


@dataclasses.dataclass
class CongruenceResult:
    verdict: str                      # "yes" | "no" | "unknown"
    scalar: Unit | None = None
    witness: CongruenceWitness | None = None
    reason: str = ""

    @property
    def yes(self):
        return self.verdict == "yes"


def congruent_modulo(
    d1: Diagram,
    d2: Diagram,
    ruleset: Ruleset,
    budget: int = 100000,
    max_extra_layers: int = 4,
) -> CongruenceResult:
    """Decide projective congruence d1 ~ u * d2 within a state budget."""
    cache = getattr(ruleset, "_cong_cache", None)
    if cache is None:
        cache = {}
        ruleset._cong_cache = cache
    key = (d1, d2)
    hit = cache.get(key)
    if hit is not None and (hit.verdict != "unknown" or budget <= hit._budget):
        return hit
    res = _congruent_modulo(d1, d2, ruleset, budget, max_extra_layers)
    res._budget = budget
    if len(cache) < 100000:
        cache[key] = res
        if res.verdict == "no":
            rev = CongruenceResult("no", None, None, res.reason)
            rev._budget = budget
            cache[(d2, d1)] = rev
    return res


def _congruent_modulo(
    d1: Diagram,
    d2: Diagram,
    ruleset: Ruleset,
    budget: int,
    max_extra_layers: int,
) -> CongruenceResult:
    sig = ruleset.signature
    inv1 = _class_invariants(ruleset, d1)
    inv2 = _class_invariants(ruleset, d2)
    if inv1 != inv2:
        return CongruenceResult("no", reason=f"invariant mismatch")

    canon = canonicalizer(ruleset)
    c1, u1 = canon(d1)
    c2, u2 = canon(d2)
    # value(d1) = u1 * value(c1); want s with value(d1) = s * value(d2)
    if c1 == c2:
        w = CongruenceWitness(d1, _canonical_moves(ruleset, d1)
                              + _inverse_moves(ruleset, d2, c2),
                              u1 * u2.inverse(), d2)
        return CongruenceResult("yes", u1 * u2.inverse(), w)

    size_cap = max(len(d1.layers), len(d2.layers)) + max_extra_layers

    # bidirectional search over canonical representatives
    # fronts: state -> (unit, moves) with value(origin) = unit * value(state)
    start1 = {c1: (u1, _canonical_moves(ruleset, d1))}
    start2 = {c2: (u2, _canonical_moves(ruleset, d2))}
    frontier = [dict(start1), dict(start2)]
    seen = [dict(start1), dict(start2)]
    expanded = 0

    def meet(state):
        ua, moves_a = seen[0][state]
        ub, moves_b = seen[1][state]
        inv_b = _invert_moves(ruleset, d2, moves_b)
        total = ua * ub.inverse()
        w = CongruenceWitness(d1, tuple(moves_a) + inv_b, total, d2)
        return CongruenceResult("yes", total, w)

    for state in start1:
        if state in seen[1]:
            return meet(state)

    while frontier[0] or frontier[1]:
        side = 0 if (frontier[0] and (len(frontier[0]) <= len(frontier[1]) or not frontier[1])) else 1
        new: dict = {}
        for state, (unit, moves) in frontier[side].items():
            expanded += 1
            if expanded > budget:
                return CongruenceResult("unknown", reason="budget exhausted")
            for step_moves, u_step, nxt in _canonical_neighbors(
                ruleset, state, size_cap
            ):
                if nxt in seen[side]:
                    continue
                entry = (unit * u_step, tuple(moves) + tuple(step_moves))
                seen[side][nxt] = entry
                new[nxt] = entry
                if nxt in seen[1 - side]:
                    return meet(nxt)
        frontier[side] = new
    # exhausting the size-capped search space does not separate the classes
    return CongruenceResult("unknown", reason="search space exhausted at size cap")


def _canonical_moves(ruleset: Ruleset, d: Diagram) -> tuple:
    """Moves sending d to its canonical form."""
    return canonicalizer(ruleset).full(d)[2]


def _invert_moves(ruleset: Ruleset, origin: Diagram, moves: Sequence) -> tuple:
    """Inverse move list: from the end state of ``moves`` back to origin.

    A swap is its own positional inverse, and a rule replacement reverses
    in place at the same block location.
    """
    out = []
    for mv in reversed(moves):
        if isinstance(mv, Swap):
            out.append(Swap(mv.layer))
        else:
            out.append(RuleMove(mv.rule, -mv.direction, mv.layer, mv.offset))
    return tuple(out)


def _canonical_neighbors(ruleset: Ruleset, state: Diagram, size_cap: int):
    """Neighbour canonical states via one E-rule move plus normalization."""
    cache = getattr(ruleset, "_nbr_cache", None)
    if cache is None:
        cache = {}
        ruleset._nbr_cache = cache
    hit = cache.get(state)
    if hit is None:
        hit = tuple(_compute_neighbors(ruleset, state))
        if len(cache) < 200000:
            cache[state] = hit
    for moves, u, c in hit:
        if len(c.layers) <= size_cap:
            yield moves, u, c


def _compute_neighbors(ruleset: Ruleset, state: Diagram):
    canon = canonicalizer(ruleset)
    for rule in ruleset.rules_e:
        for direction in (+1, -1):
            for swaps, mv in rule_matches(ruleset, state, rule, direction):
                d = state
                u = ONE
                try:
                    for s in swaps:
                        d, us = apply_move(ruleset, d, s)
                        u = u * us
                    d, ur = apply_rule_move(ruleset, d, mv)
                    u = u * ur
                except MoveError:
                    continue
                c, uc, cmoves = canon.full(d)
                moves = tuple(swaps) + (mv,) + cmoves
                yield moves, u * uc, c


# ---------------------------------------------------------------------------
# Loop tracing
# ---------------------------------------------------------------------------

def _strand_tagsets(sig, d: Diagram, tags: Sequence[int]):
    """For each strand of d, the set of layer tags its legs pass through."""
    g = strand_graph(sig, d)
    n = len(d.layers)
    out = []
    for s in g.strands:
        touched = set()
        for (line, pos) in s.points:
            for t in (line - 1, line):
                if 0 <= t < n:
                    lay = d.layers[t]
                    a = lay.pos
                    legs = (
                        range(a, a + len(sig.gen_src(lay.gen)))
                        if t == line
                        else range(a, a + len(sig.gen_tgt(lay.gen)))
                    )
                    if pos in legs:
                        touched.add(tags[t])
        ends = tuple(sorted(p for p in s.points if p[0] in (0, n)))
        out.append((s.colour, s.closed, ends, frozenset(touched)))
    return out


def _is_dotlike(sig, gen: Gen) -> bool:
    return not sig.gen_src(gen) and not sig.gen_tgt(gen)


def _apply_move_tagged(ruleset: Ruleset, d: Diagram, tags, move, fresh):
    sig = ruleset.signature
    if isinstance(move, Swap):
        d2, u = swap(ruleset, d, move.layer)
        t2 = list(tags)
        t2[move.layer], t2[move.layer + 1] = t2[move.layer + 1], t2[move.layer]
        return d2, tuple(t2), u, fresh
    rule = ruleset_rule(ruleset, move.rule)
    pat, rep, _ = _rule_sides(rule, move.direction)
    d2, u = apply_rule_move(ruleset, d, move)
    old_block = list(tags[move.layer:move.layer + len(pat.layers)])
    # transfer tags of dot-like layers positionally; everything else is fresh
    old_dots = [
        t for t, lay in zip(old_block, pat.layers) if _is_dotlike(sig, lay.gen)
    ]
    new_tags = []
    di = 0
    for lay in rep.layers:
        if _is_dotlike(sig, lay.gen) and di < len(old_dots):
            new_tags.append(old_dots[di])
            di += 1
        else:
            fresh -= 1
            new_tags.append(fresh)
    t2 = tags[:move.layer] + tuple(new_tags) + tags[move.layer + len(pat.layers):]
    return d2, t2, u, fresh


def trace_loop(ruleset: Ruleset, witness: CongruenceWitness):
    """Accumulated scalar and dot/strand bijection of a closed move trail."""
    sig = ruleset.signature
    d = witness.source
    tags = tuple(range(len(d.layers)))
    fresh = 0
    u = ONE
    strand_map_total = None
    cur_strands = _strand_tagsets(sig, d, tags)
    for mv in witness.moves:
        d2, tags2, step, fresh = _apply_move_tagged(ruleset, d, tags, mv, fresh)
        u = u * step
        new_strands = _strand_tagsets(sig, d2, tags2)
        step_map = {}
        for i, (col, closed, ends, tset) in enumerate(cur_strands):
            if not closed:
                cand = [
                    j for j, s in enumerate(new_strands)
                    if not s[1] and s[2] == ends
                ]
            else:
                cand = [
                    j for j, s in enumerate(new_strands)
                    if s[1] and s[3] & tset
                ]
            if len(cand) != 1:
                raise MoveError("ambiguous strand tracking")
            step_map[i] = cand[0]
        strand_map_total = (
            step_map
            if strand_map_total is None
            else {i: step_map[j] for i, j in strand_map_total.items()}
        )
        d, tags, cur_strands = d2, tags2, new_strands
    if d != witness.source:
        raise NotALoop("witness does not return to its source")
    # dots: initial layer index -> final layer index via surviving tags
    dot_map = {}
    for final_idx, tag in enumerate(tags):
        if tag >= 0 and _is_dotlike(sig, d.layers[final_idx].gen):
            dot_map[tag] = final_idx
    if strand_map_total is None:
        strand_map_total = {i: i for i in range(len(cur_strands))}
    return u, dot_map, strand_map_total


def loop_scalar(ruleset: Ruleset, witness: CongruenceWitness):
    """(scalar, bijection) of a loop witness, per the loop-tracing contract."""
    u, dot_map, strand_map = trace_loop(ruleset, witness)
    identity_bij = all(k == v for k, v in dot_map.items()) and all(
        k == v for k, v in strand_map.items()
    )
    return u, {"dots": dot_map, "strands": strand_map, "identity": identity_bij}
