"""Linear-arithmetic reasoning over path conditions.

Facts are boolean terms. A set of facts is refuted by splitting into
disjunctive normal form, then running equality elimination followed by
Fourier-Motzkin over the rationals with integer tightening. Every answer
of "unsat" is therefore backed by interval or divisibility reasoning; any
resource cap simply gives up, which is always safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .linear import difference, linearize, term_key
from .terms import POW160, WORD_MAX, Apply, IntLit, Term

# intrinsic value ranges of word-valued atoms
_INTRINSIC = {
    "chop": (0, WORD_MAX),
    "select": (0, WORD_MAX),
    "keccak256": (0, WORD_MAX),
    "#and": (0, WORD_MAX),
    "#or": (0, WORD_MAX),
    "#not": (0, WORD_MAX),
    "#symEcrec": (0, POW160 - 1),
    "#bool2word": (0, 1),
    "#byte": (0, 255),
    "Rsstore": (0, 15000),
}

MAX_DISJUNCTS = 256
MAX_CONSTRAINTS = 4000


def intrinsic_range(atom: Term) -> tuple[int | None, int | None]:
    if isinstance(atom, Apply):
        return _INTRINSIC.get(atom.symbol, (None, None))
    return None, None


class _TooBig(Exception):
    pass


@dataclass(frozen=True)
class Lin:
    """`sum(coeffs) + const  OP  0` with OP one of le, eq, ne."""

    coeffs: tuple[tuple[Term, int], ...]
    const: int
    op: str


@dataclass(frozen=True)
class BoolLit:
    atom: Term
    positive: bool


def _lin(a: Term, b: Term, op: str, shift: int = 0) -> Lin:
    coeffs, const = difference(a, b)
    items = tuple(sorted(coeffs.items(), key=lambda kv: term_key(kv[0])))
    return Lin(items, const + shift, op)


def _literal(t: Term, positive: bool) -> list[list]:
    """DNF of an atomic formula, possibly negated."""
    if isinstance(t, Apply) and len(t.args) == 2:
        a, b = t.args
        s = t.symbol
        if not positive:
            s = {"==Int": "=/=Int", "=/=Int": "==Int", "<Int": ">=Int", "<=Int": ">Int",
                 ">Int": "<=Int", ">=Int": "<Int"}.get(s, s)
        if s == "==Int":
            return [[_lin(a, b, "eq")]]
        if s == "=/=Int":
            return [[_lin(a, b, "ne")]]
        if s == "<Int":
            return [[_lin(a, b, "le", 1)]]
        if s == "<=Int":
            return [[_lin(a, b, "le")]]
        if s == ">Int":
            return [[_lin(b, a, "le", 1)]]
        if s == ">=Int":
            return [[_lin(b, a, "le")]]
    return [[BoolLit(t, positive)]]


def dnf(t: Term, positive: bool = True, limit: int = MAX_DISJUNCTS) -> list[list]:
    if isinstance(t, Apply):
        s = t.symbol
        if s == "true" or s == "false":
            holds = (s == "true") == positive
            return [[]] if holds else []
        if s == "notBool":
            return dnf(t.args[0], not positive, limit)
        if s in ("andBool", "orBool"):
            conj = (s == "andBool") == positive
            left = dnf(t.args[0], positive, limit)
            right = dnf(t.args[1], positive, limit)
            if not conj:
                out = left + right
            else:
                out = [x + y for x in left for y in right]
            if len(out) > limit:
                raise _TooBig
            return out
        if s == "#rangeUInt" and isinstance(t.args[0], IntLit):
            x = t.args[1]
            expanded = Apply("andBool", (Apply("<=Int", (IntLit(0), x)),
                                         Apply("<Int", (x, IntLit(2 ** t.args[0].value)))))
            return dnf(expanded, positive, limit)
    return _literal(t, positive)


# ---------------------------------------------------------------------------
# refutation of one conjunction


def _normalize_int(coeffs: dict, const) -> tuple[dict, int]:
    """Scale a rational linear form to coprime integer coefficients."""
    den = 1
    for c in list(coeffs.values()) + [const]:
        if isinstance(c, Fraction):
            den = den * c.denominator // math.gcd(den, c.denominator)
    ic = {a: int(c * den) for a, c in coeffs.items() if c}
    return ic, int(const * den)


def _tighten(coeffs: dict[Term, int], const) -> tuple[dict[Term, int], int]:
    """Integer rounding of `sum + const <= 0` over integer atoms."""
    g = 0
    for c in coeffs.values():
        g = math.gcd(g, c)
    if g == 0:
        return coeffs, const
    return {a: c // g for a, c in coeffs.items()}, math.ceil(Fraction(const) / g)


def _conj_unsat(lits: list) -> bool:
    pos, neg = set(), set()
    eqs, les, nes = [], [], []
    for lit in lits:
        if isinstance(lit, BoolLit):
            (pos if lit.positive else neg).add(lit.atom)
            continue
        target = {"eq": eqs, "le": les, "ne": nes}[lit.op]
        target.append((dict(lit.coeffs), lit.const))
    if pos & neg:
        return True
    return _linear_unsat(eqs, les, nes)


def _atoms_of(forms) -> set:
    out = set()
    for coeffs, _ in forms:
        out.update(coeffs)
    return out


def _linear_unsat(eqs, les, nes) -> bool:
    atoms = _atoms_of(eqs) | _atoms_of(les) | _atoms_of(nes)
    for atom in atoms:
        lo, hi = intrinsic_range(atom)
        if lo is not None:
            les.append(({atom: -1}, lo))
        if hi is not None:
            les.append(({atom: 1}, -hi))

    # equality elimination by substitution
    eqs = [(dict(c), Fraction(k)) for c, k in eqs]
    les = [(dict(c), Fraction(k)) for c, k in les]
    nes = [(dict(c), Fraction(k)) for c, k in nes]
    while eqs:
        coeffs, const = eqs.pop()
        coeffs = {a: c for a, c in coeffs.items() if c}
        icoeffs, iconst = _normalize_int(coeffs, const)
        if not icoeffs:
            if iconst != 0:
                return True
            continue
        g = 0
        for c in icoeffs.values():
            g = math.gcd(g, c)
        if iconst % g:
            return True
        pivot = min(icoeffs, key=lambda a: (abs(icoeffs[a]) != 1, term_key(a)))
        pc = Fraction(icoeffs[pivot])
        # pivot = -(rest + const) / pc
        rest = {a: Fraction(-c) / pc for a, c in icoeffs.items() if a != pivot}
        rconst = Fraction(-iconst) / pc

        def sub(form):
            c, k = form
            if pivot not in c:
                return form
            f = c[pivot]
            out = {a: v for a, v in c.items() if a != pivot}
            for a, v in rest.items():
                out[a] = out.get(a, 0) + f * v
            return {a: v for a, v in out.items() if v}, k + f * rconst

        eqs = [sub(f) for f in eqs]
        les = [sub(f) for f in les]
        nes = [sub(f) for f in nes]

    ineqs = []
    for c, k in les:
        ic, ik = _normalize_int(c, k)
        ic, ik = _tighten(ic, ik)
        if not ic:
            if ik > 0:
                return True
            continue
        ineqs.append((ic, ik))
    pinned = []
    for c, k in nes:
        ic, ik = _normalize_int(c, k)
        if not ic:
            if ik == 0:
                return True
            continue
        if len(ic) == 1:
            (atom, a), = ic.items()
            if ik % a == 0:
                pinned.append((atom, -ik // a))
    if pinned:
        ineqs = _apply_disequalities(ineqs, pinned)
        if ineqs is None:
            return True
    return _fourier_motzkin(ineqs)


def _single_bounds(ineqs) -> dict:
    bounds: dict[Term, list] = {}
    for c, k in ineqs:
        if len(c) != 1:
            continue
        (atom, a), = c.items()
        lo_hi = bounds.setdefault(atom, [None, None])
        if a > 0:  # a x + k <= 0  ->  x <= floor(-k / a)
            v = math.floor(Fraction(-k, a))
            lo_hi[1] = v if lo_hi[1] is None else min(lo_hi[1], v)
        else:  # x >= ceil(k / -a)
            v = math.ceil(Fraction(k, -a))
            lo_hi[0] = v if lo_hi[0] is None else max(lo_hi[0], v)
    return bounds


def _apply_disequalities(ineqs, pinned):
    """Shave excluded values off single-atom bounds; None means empty."""
    for _ in range(len(pinned) + 1):
        bounds = _single_bounds(ineqs)
        changed = False
        for atom, v in pinned:
            lo, hi = bounds.get(atom, (None, None))
            if lo is not None and hi is not None and lo > hi:
                return None
            if lo == v:
                ineqs.append(({atom: -1}, v + 1))
                changed = True
            if hi == v:
                ineqs.append(({atom: 1}, -(v - 1)))
                changed = True
        if not changed:
            break
    return ineqs


def _fourier_motzkin(ineqs) -> bool:
    # dedupe: keep the tightest constant for each coefficient vector
    def canon(forms):
        best: dict = {}
        for c, k in forms:
            key = tuple(sorted(((term_key(a), v) for a, v in c.items())))
            cur = best.get(key)
            if cur is None or k > cur[1]:
                best[key] = (c, k)
        return list(best.values())

    forms = canon(ineqs)
    while True:
        atoms = _atoms_of(forms)
        if not atoms:
            return False

        def cost(a):
            p = sum(1 for c, _ in forms if c.get(a, 0) > 0)
            n = sum(1 for c, _ in forms if c.get(a, 0) < 0)
            return (p * n - p - n, term_key(a))

        atom = min(atoms, key=cost)
        pos = [f for f in forms if f[0].get(atom, 0) > 0]
        neg = [f for f in forms if f[0].get(atom, 0) < 0]
        keep = [f for f in forms if atom not in f[0]]
        if len(keep) + len(pos) * len(neg) > MAX_CONSTRAINTS:
            return False
        for pc, pk in pos:
            a = pc[atom]
            for nc, nk in neg:
                b = -nc[atom]
                comb = {}
                for x, v in pc.items():
                    comb[x] = comb.get(x, 0) + b * v
                for x, v in nc.items():
                    comb[x] = comb.get(x, 0) + a * v
                comb = {x: v for x, v in comb.items() if v}
                k = b * pk + a * nk
                comb, k = _tighten(comb, k)
                if not comb:
                    if k > 0:
                        return True
                    continue
                keep.append((comb, k))
        forms = canon(keep)


def unsat(facts: Iterable[Term]) -> bool:
    """True only when the conjunction of `facts` is certainly unsatisfiable."""
    conj: list[list] = [[]]
    try:
        for f in facts:
            d = dnf(f)
            conj = [x + y for x in conj for y in d]
            if len(conj) > MAX_DISJUNCTS:
                return False
    except _TooBig:
        return False
    return all(_conj_unsat(c) for c in conj)


class Assumptions:
    """A fixed set of path facts with cached bound and entailment queries."""

    def __init__(self, facts: Iterable[Term] = ()):
        self.facts = tuple(facts)
        self._bounds: dict | None = None
        self._entails: dict[Term, bool] = {}
        self._unsat: bool | None = None

    def extended(self, *more: Term) -> "Assumptions":
        return Assumptions(self.facts + tuple(more))

    @property
    def inconsistent(self) -> bool:
        if self._unsat is None:
            self._unsat = unsat(self.facts)
        return self._unsat

    def _single(self) -> dict:
        if self._bounds is None:
            forms = []
            for f in self.facts:
                try:
                    d = dnf(f)
                except _TooBig:
                    continue
                if len(d) != 1:
                    continue
                for lit in d[0]:
                    if isinstance(lit, Lin) and len(lit.coeffs) == 1:
                        (atom, a), = lit.coeffs
                        if lit.op in ("le", "eq"):
                            forms.append(({atom: a}, lit.const))
                        if lit.op == "eq":
                            forms.append(({atom: -a}, -lit.const))
            self._bounds = _single_bounds(forms)
        return self._bounds

    def atom_bounds(self, atom: Term) -> tuple[int | None, int | None]:
        lo, hi = intrinsic_range(atom)
        flo, fhi = self._single().get(atom, (None, None))
        if flo is not None:
            lo = flo if lo is None else max(lo, flo)
        if fhi is not None:
            hi = fhi if hi is None else min(hi, fhi)
        return lo, hi

    def interval(self, t: Term) -> tuple[int | None, int | None]:
        return interval(t, self)

    def entails(self, goal: Term) -> bool:
        hit = self._entails.get(goal)
        if hit is None:
            hit = self._entails[goal] = unsat(self.facts + (Apply("notBool", (goal,)),))
        return hit


def interval(t: Term, assumptions: Assumptions | None = None) -> tuple[int | None, int | None]:
    """Sound enclosing interval of an Int term; None marks an unbounded side."""
    coeffs, const = linearize(t)
    lo: int | None = const
    hi: int | None = const
    for atom, c in coeffs.items():
        alo, ahi = assumptions.atom_bounds(atom) if assumptions else intrinsic_range(atom)
        if c < 0:
            alo, ahi = ahi, alo
        lo = None if lo is None or alo is None else lo + c * alo
        hi = None if hi is None or ahi is None else hi + c * ahi
    return lo, hi
