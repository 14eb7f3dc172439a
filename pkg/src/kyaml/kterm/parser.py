"""Concrete syntax for terms.

Grammar (loosest to tightest binding)::

    expr    := or
    or      := and   (("orBool" | "or" | "||") and)*
    and     := not   (("andBool" | "and" | "&&") not)*
    not     := ("notBool" | "not" | "!") not | cmp
    cmp     := concat (CMPOP concat)?
    concat  := sum ("++" sum)*
    sum     := prod (("+Int" | "-Int" | "+" | "-") prod)*
    prod    := atom (("*Int" | "*") atom)*
    atom    := INT | "-" INT | STRING | "_" | VAR [":" SORT]
             | "#buf" "(" expr "," expr ")"
             | NAME "(" args ")" | CONSTANT | "(" ")" | "(" expr ")"
             | "(" expr "," [expr ("," expr)*] ")"

Identifiers starting with an uppercase letter (or `_`) are variables unless
they name a constant such as `BYZANTIUM` or are applied to arguments.
"""

from __future__ import annotations

import json
import re

from .printer import default_var_sort
from .terms import (
    ANY,
    BOOL,
    BYTES,
    CONSTANTS,
    INT,
    SYMBOLS,
    VAR_SORTS,
    WILDCARD,
    Apply,
    ArityMismatch,
    Buf,
    BufConcat,
    IntLit,
    StrLit,
    SymVar,
    Term,
    TermError,
    Tuple,
    UnknownSymbol,
    lookup,
)


class TermSyntaxError(TermError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<num>0[xX][0-9a-fA-F]+|\d+)
  | (?P<op>=/=Int|==Int|<=Int|>=Int|<Int|>Int|\+Int|-Int|\*Int
          |=/=|==|!=|<=|>=|\+\+|&&|\|\||[+\-*<>!])
  | (?P<ident>[#.]?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),:])
    """,
    re.VERBOSE,
)

_CMP_OPS = {
    "==Int": "==Int",
    "==": "==Int",
    "=/=Int": "=/=Int",
    "=/=": "=/=Int",
    "!=": "=/=Int",
    "<Int": "<Int",
    "<": "<Int",
    "<=Int": "<=Int",
    "<=": "<=Int",
    ">Int": ">Int",
    ">": ">Int",
    ">=Int": ">=Int",
    ">=": ">=Int",
}
_ADD_OPS = {"+Int": "+Int", "+": "+Int", "-Int": "-Int", "-": "-Int"}
_MUL_OPS = {"*Int": "*Int", "*": "*Int"}
_OR_OPS = {"orBool", "or", "||"}
_AND_OPS = {"andBool", "and", "&&"}
_NOT_OPS = {"notBool", "not", "!"}
_RESERVED = _OR_OPS | _AND_OPS | _NOT_OPS


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind, self.text, self.pos = kind, text, pos


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _error(text: str, pos: int, message: str) -> TermSyntaxError:
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return TermSyntaxError(message, line, column)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        raise _error(self.text, (tok or self.tok).pos, message)

    def expect(self, text: str) -> _Token:
        if self.tok.text != text:
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def parse(self) -> Term:
        if self.tok.kind == "eof":
            self.fail("empty term")
        term = self.expr()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}")
        return term

    def expr(self) -> Term:
        return self.or_()

    def or_(self):
        left = self.and_()
        while self.tok.text in _OR_OPS:
            self.advance()
            left = Apply("orBool", (left, self.and_()))
        return left

    def and_(self):
        left = self.not_()
        while self.tok.text in _AND_OPS:
            self.advance()
            left = Apply("andBool", (left, self.not_()))
        return left

    def not_(self):
        if self.tok.text in _NOT_OPS:
            self.advance()
            return Apply("notBool", (self.not_(),))
        return self.cmp()

    def cmp(self):
        left = self.concat()
        if self.tok.text in _CMP_OPS:
            op = _CMP_OPS[self.advance().text]
            right = self.concat()
            if self.tok.text in _CMP_OPS:
                self.fail("comparison operators do not chain")
            return Apply(op, (left, right))
        return left

    def concat(self):
        first = self.sum()
        if self.tok.text != "++":
            return first
        segments = [first]
        while self.tok.text == "++":
            self.advance()
            segments.append(self.sum())
        return BufConcat(tuple(segments))

    def sum(self):
        left = self.prod()
        while self.tok.text in _ADD_OPS:
            op = _ADD_OPS[self.advance().text]
            left = Apply(op, (left, self.prod()))
        return left

    def prod(self):
        left = self.atom()
        while self.tok.text in _MUL_OPS:
            self.advance()
            left = Apply("*Int", (left, self.atom()))
        return left

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return IntLit(int(tok.text, 0))
        if tok.text == "-" and self.tokens[self.i + 1].kind == "num":
            self.advance()
            return IntLit(-int(self.advance().text, 0))
        if tok.kind == "str":
            self.advance()
            return StrLit(json.loads(tok.text))
        if tok.text == "(":
            return self.paren()
        if tok.kind == "ident":
            return self.ident()
        self.fail(f"unexpected {tok.text or 'end of input'!r}")

    def paren(self) -> Term:
        self.advance()
        if self.tok.text == ")":
            self.advance()
            return Tuple(())
        first = self.expr()
        if self.tok.text == ")":
            self.advance()
            return first
        elements = [first]
        while self.tok.text == ",":
            self.advance()
            if self.tok.text == ")":
                break
            elements.append(self.expr())
        self.expect(")")
        return Tuple(tuple(elements))

    def ident(self) -> Term:
        tok = self.advance()
        name = tok.text
        if name in _RESERVED:
            self.fail(f"operator {name!r} used as an operand", tok)
        if name == "_":
            return WILDCARD
        if self.tok.text == "(":
            if name == "#buf":
                self.advance()
                length = self.expr()
                self.expect(",")
                content = self.expr()
                self.expect(")")
                return Buf(length, content)
            if name not in SYMBOLS:
                raise UnknownSymbol(f"unknown function symbol {name!r}")
            sym = lookup(name)
            self.advance()
            args = []
            if self.tok.text != ")":
                args.append(self.expr())
                while self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
            self.expect(")")
            if len(args) != sym.arity:
                raise ArityMismatch(f"{name} expects {sym.arity} argument(s), got {len(args)}")
            return Apply(name, tuple(args))
        if name in CONSTANTS:
            return Apply(name)
        if name[0].isupper() or name[0] == "_":
            sort = None
            if self.tok.text == ":":
                self.advance()
                sort_tok = self.advance()
                if sort_tok.text not in VAR_SORTS:
                    self.fail(f"unknown sort {sort_tok.text!r}", sort_tok)
                sort = sort_tok.text
            return SymVar(name, sort)
        raise UnknownSymbol(f"unknown function symbol {name!r}")


def parse_term(text: str, expected: str = ANY) -> Term:
    """Parse `text` into a term; bare variables take their sort from context."""
    if not text or not text.strip():
        raise TermSyntaxError("empty term", 1, 1)
    return _assign_sorts(_Parser(text).parse(), expected)


def _assign_sorts(t: Term, expected: str) -> Term:
    """Give unannotated variables the sort their position calls for."""
    if isinstance(t, SymVar):
        if t.sort is None:
            return SymVar(t.name, default_var_sort(expected))
        return t
    if isinstance(t, Apply):
        sorts = lookup(t.symbol).arg_sorts
        return t.rebuild(tuple(_assign_sorts(a, s) for a, s in zip(t.args, sorts)))
    if isinstance(t, Tuple):
        return t.rebuild(tuple(_assign_sorts(e, ANY) for e in t.elements))
    if isinstance(t, Buf):
        return t.rebuild((_assign_sorts(t.length, INT), _assign_sorts(t.content, INT)))
    if isinstance(t, BufConcat):
        return t.rebuild(tuple(_assign_sorts(s, BYTES) for s in t.segments))
    return t
