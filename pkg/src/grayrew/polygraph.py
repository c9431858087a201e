"""
Rulesets: signatures plus oriented rules R and unoriented moves E.

Rules whose boundary is parameterized by a colour are instantiated
eagerly over the (finite) colour range of the signature; exchange moves
are never materialized, they are generated on demand from the degree
pairing by :mod:`grayrew.modulo`.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from pathlib import Path
from typing import Callable, Sequence

from .scalars import (
    Grading,
    RingElement,
    Unit,
    ONE,
    mu,
    mu_sign,
    parse_ring,
    parse_unit,
)
from .diagrams import (
    Diagram,
    Gen,
    Layer,
    Signature,
    Strand,
    identity,
)
from . import foam as foam_mod


class ParseError(Exception):
    pass


class HomogeneityError(Exception):
    pass


class AdaptednessError(Exception):
    pass


class IllegalLabel(Exception):
    pass


class DistantColourViolation(Exception):
    pass


@dataclasses.dataclass(frozen=True)
class RewriteRule:
    """An oriented relation lhs -> sum of (coefficient, diagram)."""

    name: str
    lhs: Diagram
    rhs: tuple[tuple[RingElement, Diagram], ...]
    orientation: str = "R"            # "R" or "E"
    admissibility: str = "always"     # "always" or "distinct_strands"

    @property
    def monomial_scalar(self) -> Unit | None:
        """For single-term unit rules, the scalar; else None."""
        if len(self.rhs) != 1:
            return None
        return self.rhs[0][0].as_unit()

    def rhs_diagrams(self):
        return [d for _, d in self.rhs]


class TableSignature(Signature):
    """A signature given by explicit finite tables (generic rulesets)."""

    def __init__(
        self,
        objects: Sequence,
        one_gens: dict,       # strand kind -> (src obj, tgt obj)
        two_gens: dict,       # gen kind -> {"src": [...], "tgt": [...], "degree": Grading}
        degree_mod: tuple[int, int] = (0, 0),
    ):
        self.object_set = set(objects)
        self.one_gens = dict(one_gens)
        self.two_gens = dict(two_gens)
        self.degree_mod = degree_mod

    def transport_left(self, obj, strand: Strand):
        entry = self.one_gens.get(strand.kind)
        if entry is None:
            return None
        src, tgt = entry
        return tgt if obj == src else None

    def gen_src(self, gen: Gen):
        return tuple(self.two_gens[gen.kind]["src"])

    def gen_tgt(self, gen: Gen):
        return tuple(self.two_gens[gen.kind]["tgt"])

    def gen_degree(self, gen: Gen) -> Grading:
        return self.two_gens[gen.kind]["degree"]

    def gen_wiring(self, gen: Gen):
        src = self.gen_src(gen)
        tgt = self.gen_tgt(gen)
        wiring = self.two_gens[gen.kind].get("wiring")
        if wiring is not None:
            return tuple(tuple(p) for p in wiring)
        # default: caps join their two legs, cups likewise, bare gens none
        if len(src) == 2 and not tgt:
            return (("s0", "s1"),)
        if len(tgt) == 2 and not src:
            return (("t0", "t1"),)
        if not src and not tgt:
            return ()
        raise ValueError(f"no wiring for generator kind {gen.kind!r}")


class Ruleset:
    """A signature with oriented rules R, moves E and an exchange policy."""

    def __init__(
        self,
        name: str,
        signature: Signature,
        rules_r: Sequence[RewriteRule],
        rules_e: Sequence[RewriteRule],
        interchanger: str = "mu",     # "mu" | "sign" | "none"
        meta: dict | None = None,
    ):
        self.name = name
        self.signature = signature
        self.rules_r = list(rules_r)
        self.rules_e = list(rules_e)
        self.interchanger = interchanger
        self.meta = dict(meta or {})
        self._exchange_cache: dict = {}
        self._validate()

    # ---- exchange scalar -------------------------------------------------

    def exchange_scalar(self, upper: Gen, lower: Gen) -> Unit:
        cache = self._exchange_cache
        key = (upper, lower)
        hit = cache.get(key)
        if hit is not None:
            return hit
        if self.interchanger == "none":
            out = ONE
        else:
            du = self.signature.reduce_degree(self.signature.gen_degree(upper))
            dl = self.signature.reduce_degree(self.signature.gen_degree(lower))
            out = mu_sign(du, dl) if self.interchanger == "sign" else mu(du, dl)
        cache[key] = out
        return out

    # ---- validation --------------------------------------------------------

    def _validate(self):
        sig = self.signature
        for rule in self.rules_r + self.rules_e:
            sig.check_legal(rule.lhs)
            lhs_tgt = sig.target(rule.lhs)
            lhs_deg = sig.degree(rule.lhs)
            for coeff, d in rule.rhs:
                sig.check_legal(d)
                if d.source != rule.lhs.source or sig.target(d) != lhs_tgt:
                    raise ParseError(
                        f"rule {rule.name}: rhs boundary does not match lhs"
                    )
                if sig.degree(d) != lhs_deg:
                    raise HomogeneityError(
                        f"rule {rule.name}: lhs degree {lhs_deg}, "
                        f"rhs term degree {sig.degree(d)}"
                    )
                if coeff.is_zero:
                    raise ParseError(f"rule {rule.name}: zero rhs coefficient")
        for rule in self.rules_e:
            if rule.rhs and rule.monomial_scalar is None:
                raise ParseError(
                    f"modulo rule {rule.name} is not monomial-invertible"
                )
            if not rule.rhs:
                raise ParseError(
                    f"modulo rule {rule.name} has an empty right-hand side"
                )

    def check_adapted(self, budget: int = 2000) -> list[str]:
        """Check no lhs is congruent to a rhs support monomial, within budget.

        Returns warnings for inconclusive checks instead of failing, since
        full congruence is only semi-decidable.
        """
        from .modulo import congruent_modulo, CongruenceResult

        notes = []
        for rule in self.rules_r:
            for _, d in rule.rhs:
                res = congruent_modulo(rule.lhs, d, self, budget=budget)
                if res.verdict == "yes":
                    raise AdaptednessError(
                        f"rule {rule.name}: lhs lies in the projective "
                        f"support of its target"
                    )
                if res.verdict == "unknown":
                    notes.append(
                        f"rule {rule.name}: adaptedness check inconclusive"
                    )
        for n in notes:
            warnings.warn(n)
        return notes


# ---------------------------------------------------------------------------
# Colour-schema instantiation (spec'd entry point for parameterized rules)
# ---------------------------------------------------------------------------

def instantiate_rule_schema(ruleset: Ruleset, schema: str, **bindings) -> RewriteRule:
    """Concrete rule for a colour binding, with legality enforcement.

    ``schema`` is the family name (e.g. ``"dm"``); bindings typically give
    the colour ``i``.  Raises IllegalLabel for out-of-range dots and
    DistantColourViolation for crossing families with adjacent colours.
    """
    sig = ruleset.signature
    i = bindings.get("i")
    j = bindings.get("j")
    if schema in ("dd",) and isinstance(sig, foam_mod.FoamSignature):
        if not (1 <= i <= sig.d):
            raise IllegalLabel(f"dot colour {i} out of range for d={sig.d}")
    if schema in ("dm", "nc", "sq", "bbev", "bbodd") and isinstance(
        sig, foam_mod.FoamSignature
    ):
        top = sig.d if schema == "dd" else sig.d - 1
        if not (1 <= i <= sig.d - 1):
            raise IllegalLabel(f"colour {i} out of range for d={sig.d}")
        if schema == "sq" and i + 1 > sig.d - 1:
            raise IllegalLabel(f"squeezing needs colours ({i},{i+1})")
    if schema in ("x", "r2", "r3") and j is not None and abs(i - j) <= 1:
        raise DistantColourViolation(f"colours {i}, {j} are not distant")
    wanted = f"{schema}:{i}" if i is not None else schema
    for rule in ruleset.rules_r + ruleset.rules_e:
        if rule.name == wanted or rule.name.startswith(wanted):
            return rule
    raise IllegalLabel(f"no rule instance {wanted!r} in ruleset {ruleset.name}")


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def strand_to_json(s: Strand):
    return {"kind": s.kind, "colour": s.colour}


def strand_from_json(d) -> Strand:
    return Strand(d["kind"], d.get("colour", 0))


def gen_to_json(g: Gen):
    out = {"kind": g.kind, "colour": g.colour}
    if g.extra:
        out["extra"] = [strand_to_json(s) for s in g.extra]
    return out


def gen_from_json(d) -> Gen:
    extra = tuple(strand_from_json(s) for s in d.get("extra", []))
    return Gen(d["kind"], d.get("colour", 0), extra)


def diagram_to_json(d: Diagram):
    def word(w):
        return [strand_to_json(s) for s in w]

    return {
        "base": list(d.base) if isinstance(d.base, tuple) else d.base,
        "source": word(d.source),
        "layers": [
            {"left": word(l.left), "gen": gen_to_json(l.gen), "right": word(l.right)}
            for l in d.layers
        ],
    }


def diagram_from_json(data) -> Diagram:
    base = tuple(data["base"]) if isinstance(data["base"], list) else data["base"]

    def word(lst):
        return tuple(strand_from_json(s) for s in lst)

    layers = tuple(
        Layer(word(l["left"]), gen_from_json(l["gen"]), word(l["right"]))
        for l in data["layers"]
    )
    return Diagram(base, word(data["source"]), layers)


_STRAND_TOKEN = {"u": "u", "d": "d", "s": "s"}


def diagram_from_text(text: str) -> Diagram:
    """Compact one-line form: ``base | left / gen / right ; ...``.

    The base is comma-separated integers (or a bare token for generic
    objects); words are space-separated strand tokens like ``u1 d2``;
    generator tokens look like ``dot:2``, ``rcu:1``, ``x:u1,d3``.
    """
    try:
        head, _, body = text.partition("|")
        head = head.strip()
        if "," in head or head.isdigit():
            base = tuple(int(v) for v in head.split(",") if v.strip())
        else:
            base = head

        def word(tok: str):
            out = []
            for t in tok.split():
                kind = t.rstrip("0123456789")
                col = t[len(kind):]
                out.append(Strand(kind, int(col) if col else 0))
            return tuple(out)

        layers = []
        source = None
        chunks = [c for c in body.split(";") if c.strip()]
        for i, chunk in enumerate(chunks):
            if i == 0 and "/" not in chunk:
                source = word(chunk)
                continue
            l, g, r = chunk.split("/")
            kind, _, rest = g.strip().partition(":")
            if kind == "x":
                extra = tuple(word(rest.replace(",", " ")))
                gen = Gen("x", 0, extra)
            else:
                gen = Gen(kind, int(rest) if rest else 0)
            layers.append(Layer(word(l), gen, word(r)))
        if source is None:
            source = ()
        return Diagram(base, source, tuple(layers))
    except (ValueError, KeyError) as exc:
        raise ParseError(f"bad diagram text {text!r}: {exc}") from exc


def rule_to_json(rule: RewriteRule):
    return {
        "name": rule.name,
        "orientation": rule.orientation,
        "admissibility": rule.admissibility,
        "lhs": diagram_to_json(rule.lhs),
        "rhs": [
            {"coeff": str(c), "diagram": diagram_to_json(d)} for c, d in rule.rhs
        ],
    }


def rule_from_json(data) -> RewriteRule:
    rhs = tuple(
        (parse_ring(t["coeff"]), diagram_from_json(t["diagram"]))
        for t in data["rhs"]
    )
    return RewriteRule(
        data["name"],
        diagram_from_json(data["lhs"]),
        rhs,
        data.get("orientation", "R"),
        data.get("admissibility", "always"),
    )


def ruleset_to_json(rs: Ruleset):
    if isinstance(rs.signature, foam_mod.FoamSignature):
        return dict(rs.meta)
    sig = rs.signature
    return {
        "family": "generic",
        "name": rs.name,
        "interchanger": rs.interchanger,
        "degree_mod": list(sig.degree_mod),
        "signature": {
            "objects": sorted(sig.object_set, key=str),
            "one_gens": [
                {"name": k, "src": v[0], "tgt": v[1]}
                for k, v in sig.one_gens.items()
            ],
            "two_gens": [
                {
                    "name": k,
                    "src": [strand_to_json(s) for s in v["src"]],
                    "tgt": [strand_to_json(s) for s in v["tgt"]],
                    "degree": list(v["degree"]),
                }
                for k, v in sig.two_gens.items()
            ],
        },
        "rules": [rule_to_json(r) for r in rs.rules_r + rs.rules_e],
    }


def build_foam_ruleset(data: dict, d: int | None = None) -> Ruleset:
    params = data.get("parameters", {})
    if d is None:
        d = params.get("d")
    if d is None:
        raise ParseError("foam ruleset requires the parameter d")
    degrees = {
        k: Grading(*v) for k, v in data.get("degrees", {}).items()
    }
    sig = foam_mod.FoamSignature(d, degrees)
    rules = foam_mod.FoamRules(
        sig, data["zigzag_scalars"], data["rule_scalars"]
    )
    rs_e = [
        RewriteRule(
            name,
            lhs,
            ((RingElement.from_unit(scalar or ONE), rhs),),
            "E",
            "always",
        )
        for name, lhs, scalar, rhs in rules.e_rules()
    ]
    rs_r = [
        RewriteRule(name, lhs, tuple(rhs), "R", adm)
        for name, lhs, rhs, adm in rules.r_rules()
    ]
    meta = dict(data)
    meta["parameters"] = {"d": d}
    return Ruleset(
        data.get("name", "foam"), sig, rs_r, rs_e, data.get("interchanger", "mu"),
        meta=meta,
    )


def build_generic_ruleset(data: dict) -> Ruleset:
    sig_data = data["signature"]
    objects = [
        tuple(o) if isinstance(o, list) else o for o in sig_data["objects"]
    ]
    one_gens = {
        g["name"]: (
            tuple(g["src"]) if isinstance(g["src"], list) else g["src"],
            tuple(g["tgt"]) if isinstance(g["tgt"], list) else g["tgt"],
        )
        for g in sig_data["one_gens"]
    }
    two_gens = {}
    for g in sig_data["two_gens"]:
        two_gens[g["name"]] = {
            "src": tuple(strand_from_json(s) for s in g["src"]),
            "tgt": tuple(strand_from_json(s) for s in g["tgt"]),
            "degree": Grading(*g["degree"]),
        }
        if "wiring" in g:
            two_gens[g["name"]]["wiring"] = g["wiring"]
    sig = TableSignature(
        objects, one_gens, two_gens, tuple(data.get("degree_mod", (0, 0)))
    )
    rules = [rule_from_json(r) for r in data["rules"]]
    rs_r = [r for r in rules if r.orientation == "R"]
    rs_e = [r for r in rules if r.orientation == "E"]
    return Ruleset(
        data.get("name", "ruleset"), sig, rs_r, rs_e,
        data.get("interchanger", "mu"), meta=data,
    )


def load_ruleset(path: str | Path, d: int | None = None) -> Ruleset:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return ruleset_from_json(data, d=d)


def ruleset_from_json(data: dict, d: int | None = None) -> Ruleset:
    family = data.get("family", "generic")
    if family == "foam":
        return build_foam_ruleset(data, d=d)
    if family == "generic":
        return build_generic_ruleset(data)
    raise ParseError(f"unknown ruleset family {family!r}")


def save_ruleset(rs: Ruleset, path: str | Path):
    Path(path).write_text(json.dumps(ruleset_to_json(rs), indent=1))


def data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name
