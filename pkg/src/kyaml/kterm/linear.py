"""Linear normal forms over integer atoms."""

from __future__ import annotations

from functools import lru_cache

from .printer import print_term
from .terms import POW160, POW256, Apply, IntLit, Term

Linear = tuple[dict[Term, int], int]


@lru_cache(maxsize=1 << 16)
def term_key(t: Term) -> str:
    """Deterministic total order on terms."""
    return print_term(t)


def linearize(t: Term) -> Linear:
    """Split an Int term into `sum(coef * atom) + const`.

    Anything that is not `+Int`, `-Int`, scalar `*Int` or a literal becomes an atom.
    """
    if isinstance(t, IntLit):
        return {}, t.value
    if isinstance(t, Apply):
        if t.symbol == "pow256":
            return {}, POW256
        if t.symbol == "pow160":
            return {}, POW160
        if t.symbol in ("+Int", "-Int"):
            lc, lk = linearize(t.args[0])
            rc, rk = linearize(t.args[1])
            sign = 1 if t.symbol == "+Int" else -1
            out = dict(lc)
            for atom, c in rc.items():
                out[atom] = out.get(atom, 0) + sign * c
            return {a: c for a, c in out.items() if c}, lk + sign * rk
        if t.symbol == "*Int":
            lc, lk = linearize(t.args[0])
            rc, rk = linearize(t.args[1])
            if not lc:
                return {a: c * lk for a, c in rc.items() if c * lk}, lk * rk
            if not rc:
                return {a: c * rk for a, c in lc.items() if c * rk}, lk * rk
            a, b = sorted((delinearize(lc, lk), delinearize(rc, rk)), key=term_key)
            return {Apply("*Int", (a, b)): 1}, 0
    return {t: 1}, 0


def delinearize(coeffs: dict[Term, int], const: int) -> Term:
    """Canonical term for a linear form; atoms ordered by `term_key`."""
    items = sorted(((a, c) for a, c in coeffs.items() if c), key=lambda ac: term_key(ac[0]))
    expr: Term | None = None
    for atom, c in items:
        if expr is None:
            expr = atom if c == 1 else Apply("*Int", (IntLit(c), atom))
            continue
        piece = atom if abs(c) == 1 else Apply("*Int", (IntLit(abs(c)), atom))
        expr = Apply("+Int" if c > 0 else "-Int", (expr, piece))
    if expr is None:
        return IntLit(const)
    if const > 0:
        expr = Apply("+Int", (expr, IntLit(const)))
    elif const < 0:
        expr = Apply("-Int", (expr, IntLit(-const)))
    return expr


def difference(a: Term, b: Term) -> Linear:
    ac, ak = linearize(a)
    bc, bk = linearize(b)
    out = dict(ac)
    for atom, c in bc.items():
        out[atom] = out.get(atom, 0) - c
    return {x: c for x, c in out.items() if c}, ak - bk
