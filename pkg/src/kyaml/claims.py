"""Reachability claims, K-style emission and claim-set comparison."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .frontend import ResolvedBlock, SpecBlock, resolve_inheritance
from .kterm import (
    BOOL,
    WILDCARD,
    Apply,
    Lemma,
    Term,
    UnboundVariable,
    compile_concrete,
    eval_concrete,
    free_vars,
    is_true,
    print_term,
    simplify,
)
from .minivm.cells import CELLS


class UnboundPostVariable(Exception):
    def __init__(self, block: str, names: list[str]):
        super().__init__(f"block {block!r}: variables {names} appear in the postcondition but are never bound")
        self.block = block
        self.names = names


@dataclass(frozen=True)
class Claim:
    name: str
    pre: dict[str, Term]
    requires: tuple[Term, ...]
    post: dict[str, Term]
    ensures: tuple[Term, ...] = ()

    def key(self) -> tuple:
        """Structure without the name."""
        cells = lambda m: tuple(sorted(m.items()))  # noqa: E731
        return (cells(self.pre), self.requires, cells(self.post), self.ensures)

    @property
    def variables(self) -> frozenset:
        out = set()
        for t in itertools.chain(self.pre.values(), self.requires):
            out |= free_vars(t)
        return frozenset(out)


@dataclass(frozen=True)
class ClaimSet:
    claims: tuple[Claim, ...] = ()
    lemmas: tuple[Lemma, ...] = field(default=())

    def __post_init__(self):
        names = [c.name for c in self.claims]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate claim names {sorted(dup)}")

    def __iter__(self):
        return iter(self.claims)

    def __len__(self):
        return len(self.claims)

    def names(self) -> list[str]:
        return [c.name for c in self.claims]

    def get(self, name: str) -> Claim:
        for c in self.claims:
            if c.name == name:
                return c
        raise KeyError(f"no claim named {name!r}")


def _is_wild(t: Term) -> bool:
    return t == WILDCARD


def expand(blocks: Iterable[SpecBlock | ResolvedBlock], lemmas: Iterable[Lemma] = ()) -> ClaimSet:
    """One claim per leaf block; pre-only cells are framed, post-only cells get `_` as pre."""
    resolved = resolve_inheritance(list(blocks))
    claims = []
    for b in resolved:
        if b.abstract:
            continue
        pre: dict[str, Term] = {}
        post: dict[str, Term] = {}
        for cell in CELLS:
            if cell in b.pre.match:
                pre[cell] = b.pre.match[cell]
                post[cell] = b.post.match.get(cell, b.pre.match[cell])
            elif cell in b.post.match:
                pre[cell] = WILDCARD
                post[cell] = b.post.match[cell]
        claim = Claim(b.name, pre, b.pre.where, post, b.post.where)
        bound = {v.name for v in claim.variables}
        used = set()
        for t in itertools.chain(claim.post.values(), claim.ensures):
            used |= {v.name for v in free_vars(t)}
        if used - bound:
            raise UnboundPostVariable(b.name, sorted(used - bound))
        claims.append(claim)
    return ClaimSet(tuple(claims), tuple(lemmas))


# ---------------------------------------------------------------------------
# emission


def _conj(terms: tuple[Term, ...]) -> str:
    acc = terms[0]
    for t in terms[1:]:
        acc = Apply("andBool", (acc, t))
    return print_term(acc, BOOL)


def _cell_text(cell: str, claim: Claim) -> str | None:
    sort = CELLS[cell]
    if cell not in claim.pre and cell not in claim.post:
        return None
    pre, post = claim.pre.get(cell, WILDCARD), claim.post.get(cell)
    pre_text = print_term(pre, sort)
    if post is None or post == pre and not _is_wild(pre):
        return f"<{cell}> {pre_text} </{cell}>"
    return f"<{cell}> {pre_text} => {print_term(post, sort)} </{cell}>"


def emit_k_module(cs: ClaimSet, module_name: str) -> str:
    lines = [f"module {module_name.upper()}", ""]
    for lemma in cs.lemmas:
        cond = "" if is_true(lemma.condition) else f" requires {print_term(lemma.condition, BOOL)}"
        lines.append(f"  rule {print_term(lemma.lhs)} => {print_term(lemma.rhs)}{cond}")
    if cs.lemmas:
        lines.append("")
    for claim in cs.claims:
        lines.append(f"  claim [{claim.name}]:")
        for cell in CELLS:
            text = _cell_text(cell, claim)
            if text is not None:
                lines.append(f"    {text}")
        if claim.requires:
            lines.append(f"    requires {_conj(claim.requires)}")
        if claim.ensures:
            lines.append(f"    ensures {_conj(claim.ensures)}")
        lines.append("")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def claims_equal(a: ClaimSet, b: ClaimSet) -> bool:
    """Structural equality ignoring claim names and order."""
    ka = sorted((repr(c.key()) for c in a.claims))
    kb = sorted((repr(c.key()) for c in b.claims))
    return ka == kb


def canonical_json(cs: ClaimSet) -> str:
    def cells(m):
        return {cell: print_term(t, CELLS[cell]) for cell, t in m.items()}

    doc = {
        "claims": [
            {
                "name": c.name,
                "pre": cells(c.pre),
                "requires": [print_term(t, BOOL) for t in c.requires],
                "post": cells(c.post),
                "ensures": [print_term(t, BOOL) for t in c.ensures],
            }
            for c in cs.claims
        ],
        "lemmas": [lemma.label for lemma in cs.lemmas],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# brute-force semantics over a small domain


def _freeze(value):
    if isinstance(value, dict):
        return tuple(sorted(value.items()))
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    return value


def claim_admits(claim: Claim, env: Mapping) -> tuple | None:
    """The (pre, post) pair `claim` admits under `env`, or None if its precondition fails."""
    try:
        if not all(eval_concrete(t, env) for t in claim.requires):
            return None
        pre = tuple((cell, _freeze(eval_concrete(t, env))) for cell, t in sorted(claim.pre.items())
                    if not _is_wild(t))
        post = tuple((cell, _freeze(eval_concrete(t, env))) for cell, t in sorted(claim.post.items())
                     if not _is_wild(t))
        if not all(eval_concrete(t, env) for t in claim.ensures):
            return None
    except UnboundVariable:
        return None
    return pre, post


def _admitter(claim: Claim):
    """`claim_admits` for one claim, with its terms simplified and compiled once."""
    def prep(t: Term):
        return compile_concrete(simplify(t))

    requires = [prep(t) for t in claim.requires]
    pre = [(cell, prep(t)) for cell, t in sorted(claim.pre.items()) if not _is_wild(t)]
    post = [(cell, prep(t)) for cell, t in sorted(claim.post.items()) if not _is_wild(t)]
    ensures = [prep(t) for t in claim.ensures]

    def admits(env: Mapping) -> tuple | None:
        try:
            if not all(f(env) for f in requires):
                return None
            pair = (tuple((c, _freeze(f(env))) for c, f in pre), tuple((c, _freeze(f(env))) for c, f in post))
            if not all(f(env) for f in ensures):
                return None
        except UnboundVariable:
            return None
        return pair

    return admits


def admitted_pairs(cs: ClaimSet | Iterable[Claim], domains: Mapping[str, Iterable]) -> set[tuple]:
    """Every (pre, post) pair admitted by some claim, enumerating variables over `domains`."""
    admitters = [_admitter(c) for c in (cs.claims if isinstance(cs, ClaimSet) else cs)]
    names = sorted(domains)
    values = [list(domains[n]) for n in names]
    out = set()
    for combo in itertools.product(*values):
        env = dict(zip(names, combo))
        for admits in admitters:
            pair = admits(env)
            if pair is not None:
                out.add(pair)
    return out
