"""Term data model and the function-symbol table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

# Sorts are plain strings; ANY is used for positions that accept every sort.
INT = "Int"
BOOL = "Bool"
BYTES = "Bytes"
MAP = "Map"
LIST = "List"
STRING = "String"
STATUS = "StatusCode"
SCHEDULE = "Schedule"
RECORD = "Record"
ANY = "K"

VAR_SORTS = (INT, BOOL, BYTES, MAP, LIST)

POW256 = 2**256
POW160 = 2**160
WORD_MAX = POW256 - 1


class TermError(Exception):
    """Base class for term-level errors."""


class UnknownSymbol(TermError):
    pass


class ArityMismatch(TermError):
    pass


class SortMismatch(TermError):
    pass


class UnboundVariable(TermError):
    pass


class Term:
    """Immutable symbolic expression. Subclasses cache a structural hash."""

    __slots__ = ()

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((type(self).__name__,) + self._key()))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self) or other._h != self._h:
            return False
        return self._key() == other._key()

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Term, ...]:
        return ()

    def rebuild(self, children: tuple[Term, ...]) -> Term:
        return self

    def __str__(self) -> str:
        from .printer import print_term

        return print_term(self)


@dataclass(frozen=True, eq=False, slots=True)
class IntLit(Term):
    value: int
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.value,)


@dataclass(frozen=True, eq=False, slots=True)
class StrLit(Term):
    value: str
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.value,)


@dataclass(frozen=True, eq=False, slots=True)
class SymVar(Term):
    name: str
    sort: str = INT
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.name, self.sort)

    @property
    def is_wildcard(self) -> bool:
        return self.name == "_"


@dataclass(frozen=True, eq=False, slots=True)
class Apply(Term):
    symbol: str
    args: tuple[Term, ...] = ()
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.symbol, self.args)

    def children(self):
        return self.args

    def rebuild(self, children):
        if children == self.args:
            return self
        return Apply(self.symbol, tuple(children))


@dataclass(frozen=True, eq=False, slots=True)
class Tuple(Term):
    elements: tuple[Term, ...] = ()
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.elements,)

    def children(self):
        return self.elements

    def rebuild(self, children):
        if children == self.elements:
            return self
        return Tuple(tuple(children))


@dataclass(frozen=True, eq=False, slots=True)
class Buf(Term):
    """`#buf(length, content)`: content as a big-endian integer of `length` bytes."""

    length: Term
    content: Term
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.length, self.content)

    def children(self):
        return (self.length, self.content)

    def rebuild(self, children):
        length, content = children
        if length == self.length and content == self.content:
            return self
        return Buf(length, content)


@dataclass(frozen=True, eq=False, slots=True)
class BufConcat(Term):
    segments: tuple[Term, ...] = ()
    _h: int = field(init=False, repr=False, compare=False, default=0)

    def _key(self):
        return (self.segments,)

    def children(self):
        return self.segments

    def rebuild(self, children):
        if children == self.segments:
            return self
        return BufConcat(tuple(children))


# ---------------------------------------------------------------------------
# Function symbols


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    kind: str
    arg_sorts: tuple[str, ...]
    result: str
    infix: str | None = None


def _sym(name, kind, args, result, infix=None):
    return FunctionSymbol(name, len(args), kind, tuple(args), result, infix)


_I, _B = INT, BOOL

SYMBOLS: dict[str, FunctionSymbol] = {
    s.name: s
    for s in [
        # arithmetic
        _sym("+Int", "builtin-arith", [_I, _I], _I, "+Int"),
        _sym("-Int", "builtin-arith", [_I, _I], _I, "-Int"),
        _sym("*Int", "builtin-arith", [_I, _I], _I, "*Int"),
        _sym("chop", "builtin-arith", [_I], _I),
        _sym("pow256", "builtin-arith", [], _I),
        _sym("pow160", "builtin-arith", [], _I),
        _sym("#bool2word", "builtin-arith", [_B], _I),
        _sym("#byte", "builtin-arith", [_I, _I], _I),
        _sym("#and", "builtin-arith", [_I, _I], _I),
        _sym("#or", "builtin-arith", [_I, _I], _I),
        _sym("#not", "builtin-arith", [_I], _I),
        # comparisons
        _sym("==Int", "comparison", [_I, _I], _B, "==Int"),
        _sym("=/=Int", "comparison", [_I, _I], _B, "=/=Int"),
        _sym("<Int", "comparison", [_I, _I], _B, "<Int"),
        _sym("<=Int", "comparison", [_I, _I], _B, "<=Int"),
        _sym(">Int", "comparison", [_I, _I], _B, ">Int"),
        _sym(">=Int", "comparison", [_I, _I], _B, ">=Int"),
        _sym("#rangeUInt", "comparison", [_I, _I], _B),
        # booleans
        _sym("andBool", "boolean", [_B, _B], _B, "andBool"),
        _sym("orBool", "boolean", [_B, _B], _B, "orBool"),
        _sym("notBool", "boolean", [_B], _B),
        _sym("true", "boolean", [], _B),
        _sym("false", "boolean", [], _B),
        # maps
        _sym("select", "map", [MAP, _I], _I),
        _sym("store", "map", [MAP, _I, _I], MAP),
        _sym(".Map", "map", [], MAP),
        # uninterpreted
        _sym("keccak256", "uninterpreted", [ANY], _I),
        _sym("#symEcrec", "uninterpreted", [_I, _I, _I, _I], _I),
        _sym("#ecrecEmpty", "uninterpreted", [_I, _I, _I, _I], _B),
        # refund
        _sym("Rsstore", "refund", [SCHEDULE, _I, _I, _I], _I),
        _sym("BYZANTIUM", "refund", [], SCHEDULE),
        # calldata builder
        _sym("#abiCallData2", "calldata-builder", [STRING, ANY], BYTES),
        # status codes
        _sym("EVMC_SUCCESS", "status", [], STATUS),
        _sym("EVMC_REVERT", "status", [], STATUS),
        # log records
        _sym("#call", "record", [_I] * 9, RECORD),
        _sym("#read", "record", [_I, _I], RECORD),
        _sym("#write", "record", [_I, _I, _I], RECORD),
    ]
}

CONSTANTS = {name for name, s in SYMBOLS.items() if s.arity == 0}


def lookup(name: str) -> FunctionSymbol:
    try:
        return SYMBOLS[name]
    except KeyError:
        raise UnknownSymbol(f"unknown function symbol {name!r}") from None


def app(symbol: str, *args: Term) -> Apply:
    """Build an application, checking arity against the symbol table."""
    sym = lookup(symbol)
    if len(args) != sym.arity:
        raise ArityMismatch(f"{symbol} expects {sym.arity} argument(s), got {len(args)}")
    return Apply(symbol, tuple(args))


TRUE = Apply("true")
FALSE = Apply("false")
EMPTY_MAP = Apply(".Map")
EMPTY_BUF = Buf(IntLit(0), IntLit(0))
WILDCARD = SymVar("_", ANY)


def lit(value: int) -> IntLit:
    return IntLit(value)


def boolean(value: bool) -> Apply:
    return TRUE if value else FALSE


def is_true(t: Term) -> bool:
    return t == TRUE


def is_false(t: Term) -> bool:
    return t == FALSE


def sort_of(t: Term) -> str:
    if isinstance(t, IntLit):
        return INT
    if isinstance(t, StrLit):
        return STRING
    if isinstance(t, SymVar):
        return t.sort
    if isinstance(t, Apply):
        return lookup(t.symbol).result
    if isinstance(t, Tuple):
        return LIST
    if isinstance(t, (Buf, BufConcat)):
        return BYTES
    raise TypeError(f"not a term: {t!r}")


def sorts_compatible(expected: str, actual: str) -> bool:
    return expected == ANY or actual == ANY or expected == actual


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(cur.children()))


def free_vars(t: Term) -> frozenset[SymVar]:
    """Every variable occurring in `t`, wildcards excluded."""
    return frozenset(s for s in subterms(t) if isinstance(s, SymVar) and not s.is_wildcard)


def int_value(t: Term) -> int | None:
    return t.value if isinstance(t, IntLit) else None
