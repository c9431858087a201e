"""
Linear rewriting modulo: vectors, positive steps, redex search and
normalization.

A vector is a linear combination of diagrams in exchange-canonical form;
support monomials found congruent (within a budget) are merged, folding
the relating unit into the coefficient.  A rewriting step aligns one
support monomial with a rule's left-hand side through unoriented moves,
then substitutes the right-hand side linearly.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterable, Sequence

from .scalars import ONE, RingElement, Unit
from .diagrams import Diagram, strand_graph
from .polygraph import RewriteRule, Ruleset
from . import modulo
from .modulo import (
    CongruenceWitness,
    MoveError,
    RuleMove,
    Swap,
    aligned_matches,
    apply_move,
    canonicalizer,
    congruent_modulo,
    replace_block,
    ruleset_rule,
    _class_invariants,
    _canonical_moves,
    _rule_sides,
)


class FuelExhausted(Exception):
    pass


class StaleRedex(Exception):
    pass


def _diagram_sort_key(d: Diagram):
    return (len(d.layers), str(d))


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class Vector:
    """A k-linear combination of canonical diagrams.

    ``unknown_pairs`` records support pairs whose congruence check ran out
    of budget: they are kept separate, which is sound but may be redundant.
    """

    terms: dict
    unknown_pairs: frozenset = frozenset()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def support(self):
        return sorted(self.terms, key=_diagram_sort_key)

    def coeff(self, d: Diagram) -> RingElement:
        return self.terms.get(d, RingElement.zero())

    def scale(self, c: RingElement) -> "Vector":
        out = {}
        for d, coeff in self.terms.items():
            prod = coeff * c
            if not prod.is_zero:
                out[d] = prod
        return Vector(out, self.unknown_pairs)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"({self.terms[d]})*{d}" for d in self.support()
        )


def make_vector(
    ruleset: Ruleset,
    pairs: Iterable[tuple[RingElement, Diagram]],
    merge_budget: int = 20000,
) -> Vector:
    """Canonicalize, collect and merge congruent support monomials."""
    canon = canonicalizer(ruleset)
    raw: dict = {}
    for coeff, d in pairs:
        c, u = canon(d)
        add = coeff.scale(u)
        if c in raw:
            raw[c] = raw[c] + add
        else:
            raw[c] = add
    raw = {d: c for d, c in raw.items() if not c.is_zero}

    buckets: dict = {}
    for d in sorted(raw, key=_diagram_sort_key):
        buckets.setdefault(_class_invariants(ruleset, d), []).append(d)

    terms: dict = {}
    unknown = set()
    for group in buckets.values():
        reps: list[Diagram] = []
        for d in group:
            folded = False
            for r in reps:
                res = congruent_modulo(d, r, ruleset, budget=merge_budget)
                if res.yes:
                    # value(d) = s * value(r)
                    terms[r] = terms[r] + raw[d].scale(res.scalar)
                    folded = True
                    break
                if res.verdict == "unknown":
                    unknown.add(frozenset((d, r)))
            if not folded:
                reps.append(d)
                terms[d] = raw[d]
    terms = {d: c for d, c in terms.items() if not c.is_zero}
    return Vector(terms, frozenset(unknown))


def vector_add(ruleset: Ruleset, a: Vector, b: Vector, merge_budget=20000) -> Vector:
    pairs = [(c, d) for d, c in a.terms.items()] + [
        (c, d) for d, c in b.terms.items()
    ]
    return make_vector(ruleset, pairs, merge_budget)


def vectors_equal(
    ruleset: Ruleset, a: Vector, b: Vector, merge_budget: int = 20000
) -> bool | None:
    """Equality in the presented module, up to congruence of monomials.

    Returns None when a congruence check was inconclusive.
    """
    diff = vector_add(ruleset, a, b.scale(RingElement.from_int(-1)), merge_budget)
    if diff.is_zero:
        return True
    if diff.unknown_pairs:
        return None
    return False


# ---------------------------------------------------------------------------
# Redexes
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class Redex:
    """A rule occurrence on a monomial, reached through unoriented moves."""

    rule: str
    monomial: Diagram            # canonical support diagram it applies to
    align_moves: tuple           # moves from ``monomial`` to the aligned form
    align_scalar: Unit           # monomial = scalar * aligned
    layer: int
    offset: int
    depth: int = 0               # number of non-exchange moves in alignment

    @property
    def family(self) -> str:
        return self.rule.split(":")[0]

    def aligned(self, ruleset: Ruleset) -> Diagram:
        d, _ = modulo.replay(ruleset, self.monomial, self.align_moves)
        return d

    def witness(self, ruleset: Ruleset) -> CongruenceWitness:
        return CongruenceWitness(
            self.monomial, self.align_moves, self.align_scalar,
            self.aligned(ruleset),
        )


def _admissible(ruleset: Ruleset, rule: RewriteRule, aligned: Diagram,
                layer: int, offset: int) -> bool:
    if rule.admissibility != "distinct_strands":
        return True
    sig = ruleset.signature
    g = strand_graph(sig, aligned)
    point_strand = {}
    for i, s in enumerate(g.strands):
        for p in s.points:
            point_strand[p] = i
    width = len(rule.lhs.source)
    left = (layer, offset)
    right = (layer, offset + width - 1)
    return point_strand.get(left) != point_strand.get(right)


@dataclasses.dataclass
class RedexSearch:
    redexes: list
    complete: bool                # True if the whole class was searched


def find_redexes(
    d: Diagram,
    ruleset: Ruleset,
    policy: str = "T",
    budget: int = 600,
    max_extra_layers: int = 4,
    exhaustive: bool = False,
) -> RedexSearch:
    """Rule occurrences on d, searching its congruence class breadth-first.

    ``policy`` "T" drops context-inadmissible nc/sq occurrences; "S" keeps
    every occurrence.  The search proceeds level by level and stops one
    level after the first hit unless ``exhaustive``; ``complete`` is True
    only when the whole (size-capped) class was enumerated and no move
    could leave the cap.
    """
    canon = canonicalizer(ruleset)
    c0, u0 = canon(d)
    moves0 = _canonical_moves(ruleset, d)
    size_cap = len(d.layers) + max_extra_layers

    seen = {c0: (u0, moves0, 0)}
    level = [c0]
    redexes = []
    expanded = 0
    truncated = False

    def scan(state):
        unit, moves, depth = seen[state]
        for rule in ruleset.rules_r:
            for swaps, mv in modulo.rule_matches(ruleset, state, rule, +1):
                try:
                    aligned, u_sw = modulo.replay(ruleset, state, swaps)
                except MoveError:
                    continue
                if policy == "T" and not _admissible(
                    ruleset, rule, aligned, mv.layer, mv.offset
                ):
                    continue
                redexes.append(
                    Redex(
                        rule.name,
                        d,
                        tuple(moves) + tuple(swaps),
                        unit * u_sw,
                        mv.layer,
                        mv.offset,
                        depth=depth,
                    )
                )

    while level:
        for state in level:
            expanded += 1
            if expanded > budget:
                return RedexSearch(redexes, False)
            scan(state)
        if redexes and not exhaustive:
            return RedexSearch(redexes, False)
        next_level: list = []
        for state in level:
            unit, moves, depth = seen[state]
            for step_moves, u_step, nxt in modulo._canonical_neighbors(
                ruleset, state, size_cap
            ):
                if nxt in seen:
                    continue
                if len(nxt.layers) > size_cap:
                    truncated = True
                    continue
                seen[nxt] = (
                    unit * u_step,
                    tuple(moves) + tuple(step_moves),
                    depth + 1,
                )
                next_level.append(nxt)
        level = next_level
    truncated = truncated or _class_may_exceed(ruleset, size_cap, seen)
    return RedexSearch(redexes, not truncated)


def _class_may_exceed(ruleset: Ruleset, size_cap: int, seen) -> bool:
    """Whether some E-rule could grow a seen state past the size cap."""
    grow = max(
        (len(r.rhs[0][1].layers) - len(r.lhs.layers) for r in ruleset.rules_e),
        default=0,
    )
    shrink = max(
        (len(r.lhs.layers) - len(r.rhs[0][1].layers) for r in ruleset.rules_e),
        default=0,
    )
    if grow <= 0 and shrink <= 0:
        return False
    sig = ruleset.signature
    for state in seen:
        for rule in ruleset.rules_e:
            for direction in (+1, -1):
                pat, rep, _ = _rule_sides(rule, direction)
                delta = len(rep.layers) - len(pat.layers)
                if delta <= 0 or len(state.layers) + delta <= size_cap:
                    continue
                for _ in modulo.aligned_matches(sig, state, pat):
                    return True
    return False


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class RewriteStep:
    rule: str
    monomial: Diagram
    redex: Redex
    positive: bool
    positivity_known: bool
    before: Vector
    after: Vector

    def to_json(self):
        return {
            "rule": self.rule,
            "monomial": str(self.monomial),
            "witness": self.redex.witness_json,
            "positive": self.positive,
        }


def apply_step(
    v: Vector,
    redex: Redex,
    ruleset: Ruleset,
    merge_budget: int = 20000,
    check_order: bool = False,
) -> RewriteStep:
    """Rewrite the redex's monomial inside v; records positivity."""
    m = redex.monomial
    lam = v.terms.get(m)
    if lam is None:
        raise StaleRedex(f"monomial {m} not in the vector")
    rule = ruleset_rule(ruleset, redex.rule)
    aligned = redex.aligned(ruleset)
    # value(m) = align_scalar * value(aligned); aligned contains the lhs
    produced = []
    for coeff, t in rule.rhs:
        new_d = replace_block(
            ruleset.signature, aligned, rule.lhs, t, redex.layer, redex.offset
        )
        produced.append((lam * coeff.scale(redex.align_scalar), new_d))

    if check_order:
        key = order_key(ruleset, m)
        for _, nd in produced:
            if not order_gt(key, order_key(ruleset, nd)):
                raise AssertionError(
                    f"order violation: {redex.rule} on {m} -> {nd}"
                )

    rest = [(c, d) for d, c in v.terms.items() if d != m]
    after = make_vector(ruleset, rest + produced, merge_budget)

    positive = True
    known = True
    for d in v.terms:
        if d == m:
            continue
        res = congruent_modulo(d, m, ruleset, budget=merge_budget)
        if res.yes:
            positive = False
            break
        if res.verdict == "unknown":
            known = False
    if not known and positive:
        positive = False
    return RewriteStep(
        redex.rule, m, redex, positive, known, v, after
    )


# ---------------------------------------------------------------------------
# Termination order
# ---------------------------------------------------------------------------

def order_key(ruleset: Ruleset, d: Diagram) -> tuple:
    sig = ruleset.signature
    fn = getattr(sig, "order_key", None)
    if fn is not None:
        return fn(d)
    custom = ruleset.meta.get("order")
    if custom == "gen_count_sigma":
        sigma = sum(1 for l in d.layers if l.gen.kind == "sigma")
        return (len(d.layers), sigma)
    return (len(d.layers),)


def order_gt(ka: tuple, kb: tuple) -> bool:
    return ka > kb


def order_compare(a, b, ruleset: Ruleset, merge_budget: int = 20000) -> str:
    """Greater/Less/Equal/Incomparable on diagrams or vectors.

    Diagrams compare by the lexicographic counter key; vectors by the
    multiset extension of that order on projective supports.
    """
    if isinstance(a, Diagram) and isinstance(b, Diagram):
        ka, kb = order_key(ruleset, a), order_key(ruleset, b)
        if ka == kb:
            return "Equal"
        return "Greater" if ka > kb else "Less"
    assert isinstance(a, Vector) and isinstance(b, Vector)
    sa, sb = list(a.terms), list(b.terms)
    matched_a, matched_b = set(), set()
    for da in sa:
        for db in sb:
            if db in matched_b:
                continue
            if da == db or congruent_modulo(
                da, db, ruleset, budget=merge_budget
            ).yes:
                matched_a.add(da)
                matched_b.add(db)
                break
    only_a = [d for d in sa if d not in matched_a]
    only_b = [d for d in sb if d not in matched_b]
    if not only_a and not only_b:
        return "Equal"

    def dominates(xs, ys):
        for y in ys:
            ky = order_key(ruleset, y)
            if not any(order_key(ruleset, x) > ky for x in xs):
                return False
        return True

    if dominates(only_a, only_b):
        return "Greater"
    if dominates(only_b, only_a):
        return "Less"
    return "Incomparable"


# ---------------------------------------------------------------------------
# Strategies and normalization
# ---------------------------------------------------------------------------

DEFAULT_PRIORITY = ("dd", "bbev1", "bbev0", "bbodd", "dm", "sq", "nc")


def _priority_index(order: Sequence[str], family: str) -> int:
    try:
        return order.index(family)
    except ValueError:
        return len(order)


def strategy_key(name: str, order: Sequence[str]) -> Callable:
    if name == "default":
        return lambda r: (_priority_index(order, r.family), r.depth, r.layer, r.offset)
    if name == "reverse":
        rev = tuple(reversed(order))
        return lambda r: (_priority_index(rev, r.family), r.depth, r.layer, r.offset)
    if name == "topmost":
        return lambda r: (-r.layer, _priority_index(order, r.family), r.offset)
    raise ValueError(f"unknown strategy {name!r}")


def _rule_families(ruleset: Ruleset):
    fams = []
    for r in ruleset.rules_r:
        fam = r.name.split(":")[0]
        if fam not in fams:
            fams.append(fam)
    ordered = [f for f in DEFAULT_PRIORITY if f in fams]
    return tuple(ordered + [f for f in fams if f not in ordered])


def normalize(
    v: Vector | Diagram,
    ruleset: Ruleset,
    strategy: str = "default",
    fuel: int = 10000,
    policy: str = "T",
    redex_budget: int = 600,
    merge_budget: int = 20000,
    check_order: bool = False,
    rule_filter: Callable | None = None,
) -> tuple[Vector, list[RewriteStep]]:
    """Rewrite until no admissible redex remains in any support monomial."""
    if isinstance(v, Diagram):
        v = make_vector(ruleset, [(RingElement.one(), v)], merge_budget)
    sig = ruleset.signature
    pick = strategy_key(strategy, _rule_families(ruleset))
    nf_guard = getattr(sig, "normal_form_guard", None)
    caches = getattr(ruleset, "_nf_cache", None)
    if caches is None:
        caches = {}
        ruleset._nf_cache = caches
    known_nf: set = caches.setdefault(policy, set())

    steps: list[RewriteStep] = []
    while True:
        if fuel <= 0:
            raise FuelExhausted(
                f"no normal form after {len(steps)} steps; "
                f"suspected divergence or insufficient fuel"
            )
        chosen = None
        for m in v.support():
            if m in known_nf:
                continue
            if policy == "T" and nf_guard is not None and nf_guard(m):
                known_nf.add(m)
                continue
            budget = redex_budget
            while True:
                search = find_redexes(
                    m, ruleset, policy=policy, budget=budget
                )
                redexes = search.redexes
                if rule_filter is not None:
                    redexes = [r for r in redexes if rule_filter(r)]
                if redexes:
                    chosen = min(redexes, key=pick)
                    break
                if search.complete and rule_filter is None:
                    known_nf.add(m)
                    break
                if search.complete:
                    break
                if budget >= redex_budget * 64:
                    raise FuelExhausted(
                        f"redex search inconclusive on {m} at budget {budget}"
                    )
                budget *= 4
            if chosen is not None:
                break
        if chosen is None:
            return v, steps
        step = apply_step(
            v, chosen, ruleset, merge_budget, check_order=check_order
        )
        steps.append(step)
        v = step.after
        fuel -= 1


# ---------------------------------------------------------------------------
# Church-Rosser factorization of a single (possibly non-positive) step
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class Factorization:
    w: Vector
    g: RewriteStep | None      # positive step source -> w (None: congruence)
    h: RewriteStep | None      # positive step target -> w (None: congruence)


def factor_step(step: RewriteStep, ruleset: Ruleset, merge_budget=20000) -> Factorization:
    """Factor a step as h^-1 . g with g, h positive of length <= 1."""
    v = step.before
    m = step.monomial
    lam = v.terms[m]
    # extract the class of m from the remainder
    mu = RingElement.zero()
    rest = []
    for d, c in v.terms.items():
        if d == m:
            continue
        res = congruent_modulo(d, m, ruleset, budget=merge_budget)
        if res.yes:
            mu = mu + c.scale(res.scalar)       # value(d) = scalar * value(m)
        else:
            rest.append((c, d))
    total = lam + mu

    rule = ruleset_rule(ruleset, step.rule)
    aligned = step.redex.aligned(ruleset)
    produced = []
    for coeff, t in rule.rhs:
        nd = replace_block(
            ruleset.signature, aligned, rule.lhs, t,
            step.redex.layer, step.redex.offset,
        )
        produced.append((coeff.scale(step.redex.align_scalar), nd))

    w = make_vector(
        ruleset,
        rest + [(total * c, d) for c, d in produced],
        merge_budget,
    )

    g = None
    if not total.is_zero:
        src = make_vector(
            ruleset, rest + [(total, m)], merge_budget
        )
        g = apply_step(src, dataclasses.replace(step.redex, monomial=m),
                       ruleset, merge_budget)
    h = None
    if not mu.is_zero:
        tgt_rest = rest + [(lam * c, d) for c, d in produced]
        tgt = make_vector(ruleset, tgt_rest + [(mu, m)], merge_budget)
        h = apply_step(tgt, dataclasses.replace(step.redex, monomial=m),
                       ruleset, merge_budget)
    return Factorization(w, g, h)
