"""Concrete evaluation of terms.

Values: Int -> int, Bool -> bool, Bytes -> bytes, Map -> dict, lists and
tuples -> tuple, strings and named constants -> str, log records ->
tuple headed by the record symbol name.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

from . import standins
from .terms import (
    POW160,
    POW256,
    SYMBOLS,
    Apply,
    Buf,
    BufConcat,
    IntLit,
    StrLit,
    SymVar,
    Term,
    Tuple,
    UnboundVariable,
)


def canonical_map(m: Mapping[int, int]) -> dict[int, int]:
    """Absent keys read as zero, so zero entries carry no information."""
    return {k: v for k, v in sorted(m.items()) if v != 0}


def word_bytes(value: int) -> bytes:
    return (value % POW256).to_bytes(32, "big")


def _buf(length: int, content: Any) -> bytes:
    if isinstance(content, (bytes, bytearray)):
        content = int.from_bytes(content, "big")
    if length < 0:
        raise ValueError(f"negative buffer length {length}")
    return (content % (1 << (8 * length))).to_bytes(length, "big") if length else b""


def _hash_input(value: Any) -> bytes:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, int):
        if 0 <= value < POW256:
            return word_bytes(value)
        # out-of-range integers get their own encoding so hashing stays injective on Int
        return b"int:" + str(value).encode()
    raise TypeError(f"cannot hash {value!r}")


def _byte(index: int, word: int) -> int:
    if not 0 <= index < 32:
        return 0
    return (word % POW256) >> (8 * (31 - index)) & 0xFF


def eval_concrete(t: Term, env: Mapping[str, Any]) -> Any:
    """Value of `t` with every free variable looked up in `env`."""
    ev = lambda x: eval_concrete(x, env)  # noqa: E731
    if isinstance(t, IntLit):
        return t.value
    if isinstance(t, StrLit):
        return t.value
    if isinstance(t, SymVar):
        if t.name not in env:
            raise UnboundVariable(f"no value for variable {t.name}")
        return env[t.name]
    if isinstance(t, Tuple):
        return tuple(ev(e) for e in t.elements)
    if isinstance(t, Buf):
        return _buf(ev(t.length), ev(t.content))
    if isinstance(t, BufConcat):
        return b"".join(_as_bytes(ev(s)) for s in t.segments)
    if not isinstance(t, Apply):
        raise TypeError(f"not a term: {t!r}")

    s, args = t.symbol, t.args
    # short-circuit booleans first so unevaluable branches are not touched
    if s == "andBool":
        return bool(ev(args[0])) and bool(ev(args[1]))
    if s == "orBool":
        return bool(ev(args[0])) or bool(ev(args[1]))
    vals = [ev(a) for a in args]
    match s:
        case "+Int":
            return vals[0] + vals[1]
        case "-Int":
            return vals[0] - vals[1]
        case "*Int":
            return vals[0] * vals[1]
        case "chop":
            return vals[0] % POW256
        case "pow256":
            return POW256
        case "pow160":
            return POW160
        case "#bool2word":
            return int(bool(vals[0]))
        case "#byte":
            return _byte(vals[0], vals[1])
        case "#and":
            return (vals[0] & vals[1]) % POW256
        case "#or":
            return (vals[0] | vals[1]) % POW256
        case "#not":
            return (~vals[0]) % POW256
        case "==Int":
            return vals[0] == vals[1]
        case "=/=Int":
            return vals[0] != vals[1]
        case "<Int":
            return vals[0] < vals[1]
        case "<=Int":
            return vals[0] <= vals[1]
        case ">Int":
            return vals[0] > vals[1]
        case ">=Int":
            return vals[0] >= vals[1]
        case "#rangeUInt":
            return 0 <= vals[1] < 2 ** vals[0]
        case "notBool":
            return not vals[0]
        case "true":
            return True
        case "false":
            return False
        case "select":
            return vals[0].get(vals[1], 0)
        case "store":
            m = dict(vals[0])
            m[vals[1]] = vals[2]
            return canonical_map(m)
        case ".Map":
            return {}
        case "keccak256":
            return standins.keccak(_hash_input(vals[0]))
        case "#symEcrec":
            return standins.sym_ecrec(*vals)
        case "#ecrecEmpty":
            return standins.ecrec_empty(*vals)
        case "Rsstore":
            return standins.rsstore(*vals)
        case "#abiCallData2":
            from ..abi import abi_calldata

            return eval_concrete(abi_calldata(vals[0], _concrete_args(vals[1])), {})
        case "#call" | "#read" | "#write":
            return (s, *vals)
        case _:
            # remaining nullary constants (status codes, schedules) evaluate to their names
            if not args:
                return s
    raise TypeError(f"cannot evaluate {s}")


def _as_bytes(value: Any) -> bytes:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    raise TypeError(f"buffer segment evaluated to non-bytes {value!r}")


def _concrete_args(value: Any) -> list:
    if isinstance(value, tuple):
        out = []
        for v in value:
            out.extend(_concrete_args(v))
        return out
    return [value]


_BINARY = {
    "+Int": lambda a, b: a + b,
    "-Int": lambda a, b: a - b,
    "*Int": lambda a, b: a * b,
    "#byte": _byte,
    "#and": lambda a, b: (a & b) % POW256,
    "#or": lambda a, b: (a | b) % POW256,
    "==Int": lambda a, b: a == b,
    "=/=Int": lambda a, b: a != b,
    "<Int": lambda a, b: a < b,
    "<=Int": lambda a, b: a <= b,
    ">Int": lambda a, b: a > b,
    ">=Int": lambda a, b: a >= b,
    "#rangeUInt": lambda bits, x: 0 <= x < 2**bits,
    "select": lambda m, k: m.get(k, 0),
}


def compile_concrete(t: Term) -> Callable[[Mapping[str, Any]], Any]:
    """`eval_concrete` specialised to one term: returns env -> value.

    Worth it when the same term is evaluated under many environments.
    """
    if isinstance(t, (IntLit, StrLit)):
        value = t.value
        return lambda env: value
    if isinstance(t, SymVar):
        name = t.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise UnboundVariable(f"no value for variable {name}") from None
        return var
    if isinstance(t, Tuple):
        parts = [compile_concrete(e) for e in t.elements]
        return lambda env: tuple(p(env) for p in parts)
    if isinstance(t, Buf):
        length, content = compile_concrete(t.length), compile_concrete(t.content)
        return lambda env: _buf(length(env), content(env))
    if isinstance(t, BufConcat):
        parts = [compile_concrete(s) for s in t.segments]
        return lambda env: b"".join(_as_bytes(p(env)) for p in parts)
    if not isinstance(t, Apply):
        raise TypeError(f"not a term: {t!r}")
    s = t.symbol
    args = [compile_concrete(a) for a in t.args]
    if s == "andBool":
        a, b = args
        return lambda env: bool(a(env)) and bool(b(env))
    if s == "orBool":
        a, b = args
        return lambda env: bool(a(env)) or bool(b(env))
    if s == "notBool":
        (a,) = args
        return lambda env: not a(env)
    if s in _BINARY:
        f, (a, b) = _BINARY[s], args
        return lambda env: f(a(env), b(env))
    if s == "chop":
        (a,) = args
        return lambda env: a(env) % POW256
    if s == "#ecrecEmpty":
        return lambda env: standins.ecrec_empty(*(a(env) for a in args))
    if s == "#symEcrec":
        return lambda env: standins.sym_ecrec(*(a(env) for a in args))
    # everything else goes through the interpreter on evaluated arguments
    return lambda env: eval_concrete(Apply(s, tuple(_quote(a(env)) for a in args)), {})


def _quote(value: Any) -> Term:
    """A closed term whose value is `value`."""
    if isinstance(value, bool):
        return Apply("true" if value else "false")
    if isinstance(value, int):
        return IntLit(value)
    if isinstance(value, str):
        return StrLit(value) if value not in SYMBOLS else Apply(value)
    if isinstance(value, (bytes, bytearray)):
        return Buf(IntLit(len(value)), IntLit(int.from_bytes(value, "big")))
    if isinstance(value, dict):
        out: Term = Apply(".Map")
        for k, v in sorted(value.items()):
            out = Apply("store", (out, IntLit(k), IntLit(v)))
        return out
    if isinstance(value, tuple):
        if value and isinstance(value[0], str) and value[0] in ("#call", "#read", "#write"):
            return Apply(value[0], tuple(_quote(v) for v in value[1:]))
        return Tuple(tuple(_quote(v) for v in value))
    raise TypeError(f"cannot quote {value!r}")
