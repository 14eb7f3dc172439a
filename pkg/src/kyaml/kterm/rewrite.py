"""Pattern matching and substitution."""

from __future__ import annotations

from typing import Mapping

from .terms import (
    Apply,
    IntLit,
    SortMismatch,
    StrLit,
    SymVar,
    Term,
    sort_of,
    sorts_compatible,
)

Bindings = dict[str, Term]


def match_pattern(pattern: Term, subject: Term, bindings: Bindings | None = None) -> Bindings | None:
    """Bindings making `pattern` equal to `subject`, or None.

    Repeated pattern variables must match structurally equal subterms; a
    variable only binds subjects whose sort agrees with its declared sort.
    """
    out = dict(bindings) if bindings else {}
    return out if _match(pattern, subject, out) else None


def _match(p: Term, s: Term, b: Bindings) -> bool:
    if isinstance(p, SymVar):
        if p.is_wildcard:
            return True
        if p.name in b:
            return b[p.name] == s
        if not sorts_compatible(p.sort, sort_of(s)):
            return False
        b[p.name] = s
        return True
    if type(p) is not type(s):
        return False
    if isinstance(p, (IntLit, StrLit)):
        return p == s
    if isinstance(p, Apply) and p.symbol != s.symbol:
        return False
    pc, sc = p.children(), s.children()
    if len(pc) != len(sc):
        return False
    return all(_match(x, y, b) for x, y in zip(pc, sc))


def substitute(t: Term, b: Mapping[str, Term]) -> Term:
    """Replace every bound variable; unbound ones stay as they are."""
    if not b:
        return t
    return _subst(t, b, {})


def _subst(t: Term, b: Mapping[str, Term], memo: dict) -> Term:
    if isinstance(t, SymVar):
        if t.is_wildcard or t.name not in b:
            return t
        value = b[t.name]
        if not sorts_compatible(t.sort, sort_of(value)):
            raise SortMismatch(f"{t.name}:{t.sort} cannot be bound to {value} of sort {sort_of(value)}")
        return value
    kids = t.children()
    if not kids:
        return t
    hit = memo.get(t)
    if hit is None:
        hit = memo[t] = t.rebuild(tuple(_subst(k, b, memo) for k in kids))
    return hit
