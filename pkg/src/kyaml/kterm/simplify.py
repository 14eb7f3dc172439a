"""Builtin normalization plus lemma rewriting to a fixpoint.

Builtins run bottom-up and are memoized per simplifier. Lemmas are then
applied outermost-leftmost, one rewrite at a time, renormalizing after each
step. Every rewrite counts against a shared step budget.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import standins
from .linear import delinearize, difference, linearize
from .reasoning import Assumptions, interval
from .rewrite import match_pattern, substitute
from .terms import (
    EMPTY_BUF,
    EMPTY_MAP,
    FALSE,
    POW160,
    POW256,
    TRUE,
    Apply,
    Buf,
    BufConcat,
    IntLit,
    StrLit,
    Term,
    TermError,
    Tuple,
    boolean,
    free_vars,
    is_true,
    sort_of,
)

DEFAULT_BUDGET = 10_000

_FLIP = {">Int": "<Int", ">=Int": "<=Int"}
_NEGATE = {"==Int": "=/=Int", "=/=Int": "==Int"}
_COMPARISONS = {"==Int", "=/=Int", "<Int", "<=Int", ">Int", ">=Int"}


class NonTermination(TermError):
    def __init__(self, message: str, fired: dict[str, int]):
        super().__init__(message)
        self.fired = fired


class LemmaError(TermError):
    pass


@dataclass(frozen=True)
class Lemma:
    lhs: Term
    rhs: Term
    condition: Term = TRUE
    name: str = ""

    def __post_init__(self):
        bound = {v.name for v in free_vars(self.lhs)}
        for part in (self.rhs, self.condition):
            extra = {v.name for v in free_vars(part)} - bound
            if extra:
                raise LemmaError(f"lemma {self.label}: variables {sorted(extra)} do not occur in the left-hand side")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        text = f"{self.lhs} => {self.rhs}"
        return text if is_true(self.condition) else f"{text} requires {self.condition}"


def _lit(t: Term) -> int | None:
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, Apply) and not t.args:
        if t.symbol == "pow256":
            return POW256
        if t.symbol == "pow160":
            return POW160
    return None


def negate(t: Term) -> Term:
    """Push one negation through a normalized boolean term."""
    if isinstance(t, Apply):
        s = t.symbol
        if s == "true":
            return FALSE
        if s == "false":
            return TRUE
        if s == "notBool":
            return t.args[0]
        if s in _NEGATE:
            return Apply(_NEGATE[s], t.args)
        if s == "<Int":
            return Apply("<=Int", (t.args[1], t.args[0]))
        if s == "<=Int":
            return Apply("<Int", (t.args[1], t.args[0]))
        if s == "andBool":
            return Apply("orBool", (negate(t.args[0]), negate(t.args[1])))
        if s == "orBool":
            return Apply("andBool", (negate(t.args[0]), negate(t.args[1])))
    return Apply("notBool", (t,))


def _segments(t: Term) -> list[Term]:
    return list(t.segments) if isinstance(t, BufConcat) else [t]


class Simplifier:
    def __init__(self, lemmas: Sequence[Lemma] = (), assumptions: Assumptions | None = None,
                 budget: int = DEFAULT_BUDGET):
        self.lemmas = tuple(lemmas)
        self.assumptions = assumptions
        self.budget = budget
        self.steps = 0
        self.fired: Counter[str] = Counter()
        self._norm_memo: dict[Term, Term] = {}
        self._no_redex: set[Term] = set()
        self._depth = 0

    def __call__(self, t: Term) -> Term:
        if self._depth == 0:
            self.steps = 0
            self.fired.clear()
        return self._fix(t)

    # -- driver -------------------------------------------------------------

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            cycle = ", ".join(f"{name} (x{n})" for name, n in self.fired.most_common())
            raise NonTermination(
                f"rewrite budget of {self.budget} steps exceeded; lemmas fired: {cycle or 'none'}",
                dict(self.fired),
            )

    def _fix(self, t: Term) -> Term:
        self._depth += 1
        try:
            cur = self.norm(t)
            if not self.lemmas:
                return cur
            while True:
                nxt = self._lemma_step(cur)
                if nxt is None:
                    return cur
                cur = self.norm(nxt)
        finally:
            self._depth -= 1

    def _lemma_step(self, t: Term) -> Term | None:
        if t in self._no_redex:
            return None
        for lemma in self.lemmas:
            b = match_pattern(lemma.lhs, t)
            if b is None:
                continue
            if not self._holds(substitute(lemma.condition, b)):
                continue
            self._tick()
            self.fired[lemma.label] += 1
            return substitute(lemma.rhs, b)
        kids = t.children()
        for i, k in enumerate(kids):
            new = self._lemma_step(k)
            if new is not None:
                return t.rebuild(kids[:i] + (new,) + kids[i + 1:])
        self._no_redex.add(t)
        return None

    def _holds(self, cond: Term) -> bool:
        if is_true(cond):
            return True
        c = self._fix(cond)
        if is_true(c):
            return True
        return self.assumptions is not None and self.assumptions.entails(c)

    # -- builtins -----------------------------------------------------------

    def norm(self, t: Term) -> Term:
        hit = self._norm_memo.get(t)
        if hit is not None:
            return hit
        kids = t.children()
        cur = t.rebuild(tuple(self.norm(k) for k in kids)) if kids else t
        new = self._root(cur)
        if new is not None and new != cur:
            self._tick()
            cur = self.norm(new)
        self._norm_memo[t] = cur
        self._norm_memo[cur] = cur
        return cur

    def _interval(self, t: Term):
        return interval(t, self.assumptions)

    def _root(self, t: Term) -> Term | None:
        if isinstance(t, Buf):
            return self._buf(t)
        if isinstance(t, BufConcat):
            return self._concat(t)
        if not isinstance(t, Apply):
            return None
        s, a = t.symbol, t.args
        if s == "pow256":
            return IntLit(POW256)
        if s == "pow160":
            return IntLit(POW160)
        if s in ("+Int", "-Int", "*Int"):
            coeffs, const = linearize(t)
            return delinearize(coeffs, const)
        if s in _COMPARISONS:
            return self._compare(t)
        fn = getattr(self, "_r_" + s.lstrip("#.").replace("=", ""), None)
        return fn(t, a) if fn else None

    def _r_chop(self, t, a):
        v = _lit(a[0])
        if v is not None:
            return IntLit(v % POW256)
        lo, hi = self._interval(a[0])
        if lo is not None and hi is not None and 0 <= lo and hi < POW256:
            return a[0]
        return None

    def _r_bool2word(self, t, a):
        if a[0] == TRUE:
            return IntLit(1)
        if a[0] == FALSE:
            return IntLit(0)
        return None

    def _r_byte(self, t, a):
        i, w = _lit(a[0]), _lit(a[1])
        if i is not None and w is not None:
            return IntLit((w % POW256) >> (8 * (31 - i)) & 0xFF if 0 <= i < 32 else 0)
        return None

    def _r_and(self, t, a):
        x, y = _lit(a[0]), _lit(a[1])
        if x is not None and y is not None:
            return IntLit((x & y) % POW256)
        if all(isinstance(v, Apply) and v.symbol == "#bool2word" for v in a):
            return Apply("#bool2word", (Apply("andBool", (a[0].args[0], a[1].args[0])),))
        return None

    def _r_or(self, t, a):
        x, y = _lit(a[0]), _lit(a[1])
        if x is not None and y is not None:
            return IntLit((x | y) % POW256)
        if all(isinstance(v, Apply) and v.symbol == "#bool2word" for v in a):
            return Apply("#bool2word", (Apply("orBool", (a[0].args[0], a[1].args[0])),))
        return None

    def _r_not(self, t, a):
        x = _lit(a[0])
        return IntLit((~x) % POW256) if x is not None else None

    def _r_rangeUInt(self, t, a):
        n = _lit(a[0])
        if n is None:
            return None
        x = a[1]
        return Apply("andBool", (Apply("<=Int", (IntLit(0), x)), Apply("<Int", (x, IntLit(2**n)))))

    def _r_andBool(self, t, a):
        x, y = a
        if x == FALSE or y == FALSE:
            return FALSE
        if x == TRUE:
            return y
        if y == TRUE or x == y:
            return x
        if negate(x) == y:
            return FALSE
        return None

    def _r_orBool(self, t, a):
        x, y = a
        if x == TRUE or y == TRUE:
            return TRUE
        if x == FALSE:
            return y
        if y == FALSE or x == y:
            return x
        if negate(x) == y:
            return TRUE
        return None

    def _r_notBool(self, t, a):
        n = negate(a[0])
        return None if n == t else n

    def _r_select(self, t, a):
        m, k = a
        if m == EMPTY_MAP:
            return IntLit(0)
        if isinstance(m, Apply) and m.symbol == "store":
            inner, k2, v = m.args
            same = self._same_key(k, k2)
            if same is True:
                return v
            if same is False:
                return Apply("select", (inner, k))
        return None

    def _same_key(self, k1: Term, k2: Term) -> bool | None:
        if k1 == k2:
            return True
        coeffs, const = difference(k1, k2)
        if not coeffs:
            return const == 0
        lo, hi = self._interval(delinearize(coeffs, const))
        if (lo is not None and lo > 0) or (hi is not None and hi < 0):
            return False
        if lo == 0 and hi == 0:
            return True
        if self.assumptions is not None:
            if self.assumptions.entails(Apply("=/=Int", (k1, k2))):
                return False
            if self.assumptions.entails(Apply("==Int", (k1, k2))):
                return True
        return None

    def _r_store(self, t, a):
        m, k, v = a
        if isinstance(v, Apply) and v.symbol == "select" and v.args == (m, k):
            return m
        if isinstance(m, Apply) and m.symbol == "store":
            inner, k2, v2 = m.args
            if self._same_key(k, k2) is True:
                return Apply("store", (inner, k, v))
            kv, k2v = _lit(k), _lit(k2)
            if kv is not None and k2v is not None and kv < k2v:
                return Apply("store", (Apply("store", (inner, k, v)), k2, v2))
        if _lit(v) == 0 and _lit(k) is not None:
            keys, base = [], m
            while isinstance(base, Apply) and base.symbol == "store" and _lit(base.args[1]) is not None:
                keys.append(_lit(base.args[1]))
                base = base.args[0]
            if base == EMPTY_MAP and _lit(k) not in keys:
                return m
        return None

    def _r_Rsstore(self, t, a):
        sched, *nums = a
        vals = [_lit(x) for x in nums]
        if isinstance(sched, Apply) and sched.symbol == "BYZANTIUM" and None not in vals:
            return IntLit(standins.rsstore("BYZANTIUM", *vals))
        return None

    def _r_abiCallData2(self, t, a):
        if not isinstance(a[0], StrLit):
            return None
        from ..abi import abi_calldata

        args = a[1].elements if isinstance(a[1], Tuple) else (a[1],)
        return abi_calldata(a[0].value, args)

    # -- comparisons --------------------------------------------------------

    def _compare(self, t: Apply) -> Term | None:
        s, (x, y) = t.symbol, t.args
        if s in _FLIP:
            return Apply(_FLIP[s], (y, x))
        if s in _NEGATE:
            hashed = self._hash_compare(x, y)
            if hashed is not None:
                return hashed if s == "==Int" else negate(hashed)
            for p, q in ((x, y), (y, x)):
                if isinstance(p, Apply) and p.symbol == "#bool2word" and _lit(q) in (0, 1):
                    want = (_lit(q) == 1) == (s == "==Int")
                    return p.args[0] if want else negate(p.args[0])
        coeffs, const = difference(x, y)
        if not coeffs:
            return boolean({"==Int": const == 0, "=/=Int": const != 0,
                            "<Int": const < 0, "<=Int": const <= 0}[s])
        lo, hi = self._interval(delinearize(coeffs, const))
        verdict = None
        if s in _NEGATE:
            if (lo is not None and lo > 0) or (hi is not None and hi < 0):
                verdict = False
            elif lo == 0 and hi == 0:
                verdict = True
            if verdict is not None and s == "=/=Int":
                verdict = not verdict
        elif s == "<Int":
            if hi is not None and hi < 0:
                verdict = True
            elif lo is not None and lo >= 0:
                verdict = False
        elif s == "<=Int":
            if hi is not None and hi <= 0:
                verdict = True
            elif lo is not None and lo > 0:
                verdict = False
        if verdict is not None:
            return boolean(verdict)
        return None

    def _hash_compare(self, x: Term, y: Term) -> Term | None:
        """Collision-freedom: equal hashes iff equal preimages."""
        if not (isinstance(x, Apply) and isinstance(y, Apply)
                and x.symbol == "keccak256" and y.symbol == "keccak256"):
            return None
        a, b = x.args[0], y.args[0]
        if a == b:
            return TRUE
        if sort_of(a) == sort_of(b) == "Int":
            return Apply("==Int", (a, b))
        sa, sb = self._hash_words(a), self._hash_words(b)
        if sa is None or sb is None:
            return None
        if sum(n for n, _ in sa) != sum(n for n, _ in sb):
            return FALSE
        if [n for n, _ in sa] != [n for n, _ in sb]:
            return None
        conj: Term = TRUE
        for (n, ca), (_, cb) in zip(sa, sb):
            if n == 32:
                eq = Apply("==Int", (Apply("chop", (ca,)), Apply("chop", (cb,))))
            else:
                bound = 1 << (8 * n)
                fits = all(self._fits(c, bound) for c in (ca, cb))
                if not fits:
                    return None
                eq = Apply("==Int", (ca, cb))
            conj = eq if conj == TRUE else Apply("andBool", (conj, eq))
        return conj

    def _fits(self, t: Term, bound: int) -> bool:
        lo, hi = self._interval(t)
        return lo is not None and hi is not None and lo >= 0 and hi < bound

    def _hash_words(self, t: Term) -> list[tuple[int, Term]] | None:
        if sort_of(t) == "Int":
            return [(32, t)] if self._fits(t, POW256) else None
        out = []
        for seg in _segments(t):
            if not isinstance(seg, Buf) or _lit(seg.length) is None:
                return None
            out.append((_lit(seg.length), seg.content))
        return out

    # -- buffers ------------------------------------------------------------

    def _buf(self, t: Buf) -> Term | None:
        n = _lit(t.length)
        if n == 0 and t != EMPTY_BUF:
            return EMPTY_BUF
        v = _lit(t.content)
        if n is not None and v is not None and not 0 <= v < (1 << (8 * n)):
            return Buf(t.length, IntLit(v % (1 << (8 * n))))
        return None

    def _concat(self, t: BufConcat) -> Term | None:
        flat: list[Term] = []
        for seg in t.segments:
            flat.extend(_segments(seg))
        merged: list[Term] = []
        for seg in flat:
            if isinstance(seg, Buf) and _lit(seg.length) == 0:
                continue
            prev = merged[-1] if merged else None
            if (isinstance(seg, Buf) and isinstance(prev, Buf)
                    and None not in (_lit(prev.length), _lit(prev.content), _lit(seg.length), _lit(seg.content))):
                n = _lit(seg.length)
                merged[-1] = Buf(IntLit(_lit(prev.length) + n),
                                 IntLit(_lit(prev.content) * (1 << (8 * n)) + _lit(seg.content)))
                continue
            merged.append(seg)
        if not merged:
            return EMPTY_BUF
        if len(merged) == 1:
            return merged[0]
        out = BufConcat(tuple(merged))
        return None if out == t else out


def simplify(t: Term, lemmas: Iterable[Lemma] = (), assumptions: Assumptions | Iterable[Term] | None = None,
             budget: int = DEFAULT_BUDGET) -> Term:
    """Normalize `t` with builtins and `lemmas`; facts in `assumptions` may discharge side-conditions."""
    if assumptions is not None and not isinstance(assumptions, Assumptions):
        assumptions = Assumptions(tuple(assumptions))
    return Simplifier(tuple(lemmas), assumptions, budget)(t)
