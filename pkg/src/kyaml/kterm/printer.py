"""Canonical text rendering of terms.

The output is accepted by `parse_term` and parses back to an identical term,
provided the same expected sort is supplied at the top level.
"""

from __future__ import annotations

import json

from .terms import (
    ANY,
    INT,
    VAR_SORTS,
    Apply,
    Buf,
    BufConcat,
    IntLit,
    StrLit,
    SymVar,
    Term,
    Tuple,
    lookup,
)

# binding strength of each infix operator; higher binds tighter
PREC_OR = 1
PREC_AND = 2
PREC_NOT = 3
PREC_CMP = 4
PREC_CONCAT = 5
PREC_ADD = 6
PREC_MUL = 7
PREC_ATOM = 9

BINARY_PREC = {
    "orBool": PREC_OR,
    "andBool": PREC_AND,
    "==Int": PREC_CMP,
    "=/=Int": PREC_CMP,
    "<Int": PREC_CMP,
    "<=Int": PREC_CMP,
    ">Int": PREC_CMP,
    ">=Int": PREC_CMP,
    "+Int": PREC_ADD,
    "-Int": PREC_ADD,
    "*Int": PREC_MUL,
}


def default_var_sort(expected: str) -> str:
    """Sort a bare variable gets when it appears where `expected` is wanted."""
    return expected if expected in VAR_SORTS else INT


def print_term(t: Term, expected: str = ANY) -> str:
    return _print(t, expected, 0)


def _paren(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def _print(t: Term, expected: str, ctx: int) -> str:
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, StrLit):
        return json.dumps(t.value)
    if isinstance(t, SymVar):
        if t.is_wildcard:
            return "_"
        if t.sort == default_var_sort(expected):
            return t.name
        return f"{t.name}:{t.sort}"
    if isinstance(t, Tuple):
        inner = ", ".join(_print(e, ANY, 0) for e in t.elements)
        if len(t.elements) == 1:
            inner += ","
        return f"({inner})"
    if isinstance(t, Buf):
        return f"#buf({_print(t.length, INT, 0)}, {_print(t.content, INT, 0)})"
    if isinstance(t, BufConcat):
        parts = " ++ ".join(_print(s, "Bytes", PREC_CONCAT + 1) for s in t.segments)
        return _paren(parts, ctx > PREC_CONCAT)
    if isinstance(t, Apply):
        sym = lookup(t.symbol)
        if t.symbol in BINARY_PREC:
            prec = BINARY_PREC[t.symbol]
            left, right = t.args
            lsort, rsort = sym.arg_sorts
            if prec == PREC_CMP:
                lctx, rctx = prec + 1, prec + 1
            else:
                lctx, rctx = prec, prec + 1
            text = f"{_print(left, lsort, lctx)} {t.symbol} {_print(right, rsort, rctx)}"
            return _paren(text, ctx > prec)
        if t.symbol == "notBool":
            text = f"notBool {_print(t.args[0], sym.arg_sorts[0], PREC_NOT)}"
            return _paren(text, ctx > PREC_NOT)
        if sym.arity == 0:
            return t.symbol
        args = ", ".join(_print(a, s, 0) for a, s in zip(t.args, sym.arg_sorts))
        return f"{t.symbol}({args})"
    raise TypeError(f"not a term: {t!r}")
