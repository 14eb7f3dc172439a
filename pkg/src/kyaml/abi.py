"""ABI calldata builder for full function signatures.

Static parameters are flattened into a sequence of 32-byte words; a single
trailing `bytes` parameter is encoded as offset, length and unpadded content.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .kterm import standins
from .kterm.terms import Buf, BufConcat, IntLit, Term, TermError, Tuple

_TYPE = re.compile(r"^(?P<base>[a-z]+)(?P<bits>\d*)(?P<dims>(\[\d+\])*)$")


class UnsupportedType(TermError):
    pass


class AbiArityMismatch(TermError):
    pass


@dataclass(frozen=True)
class Signature:
    name: str
    params: tuple[str, ...]
    static_words: int
    trailing_bytes: bool

    @property
    def text(self) -> str:
        return f"{self.name}({','.join(self.params)})"

    @property
    def selector(self) -> int:
        return standins.selector(self.text)

    @property
    def arg_count(self) -> int:
        return self.static_words + (1 if self.trailing_bytes else 0)


def _words(param: str) -> int:
    m = _TYPE.match(param)
    if not m:
        raise UnsupportedType(f"malformed type {param!r}")
    base, bits, dims = m.group("base"), m.group("bits"), m.group("dims")
    if base in ("uint", "int"):
        n = int(bits or 256)
        if n % 8 or not 8 <= n <= 256:
            raise UnsupportedType(f"bad integer width in {param!r}")
    elif base == "bytes" and bits:
        if not 1 <= int(bits) <= 32:
            raise UnsupportedType(f"bad bytesN width in {param!r}")
        if int(bits) != 32:
            raise UnsupportedType(f"{param}: only bytes32 is supported among bytesN")
    elif base in ("address", "bool") and not bits:
        pass
    else:
        raise UnsupportedType(f"unsupported type {param!r}")
    count = 1
    for size in re.findall(r"\[(\d+)\]", dims):
        count *= int(size)
    return count


def parse_signature(text: str) -> Signature:
    m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\((.*)\)\s*", text)
    if not m:
        raise UnsupportedType(f"malformed signature {text!r}")
    name, inner = m.groups()
    params = tuple(p.strip() for p in inner.split(",")) if inner.strip() else ()
    static, trailing = 0, False
    for i, param in enumerate(params):
        if param == "bytes":
            if i != len(params) - 1:
                raise UnsupportedType("a dynamic bytes parameter must come last")
            trailing = True
        else:
            static += _words(param)
    return Signature(name, params, static, trailing)


def _flatten(args) -> list:
    out = []
    for a in args:
        if isinstance(a, Tuple):
            out.extend(_flatten(a.elements))
        elif isinstance(a, (list, tuple)):
            out.extend(_flatten(a))
        else:
            out.append(a)
    return out


def _as_term(value) -> Term:
    if isinstance(value, Term):
        return value
    if isinstance(value, bool):
        return IntLit(int(value))
    if isinstance(value, int):
        return IntLit(value)
    raise TypeError(f"cannot encode {value!r} as a word")


def _bytes_segments(value) -> list[Term]:
    # The tail is not padded to a word boundary: a symbolic length cannot be
    # padded, and concrete and symbolic calldata must agree byte for byte.
    if isinstance(value, (bytes, bytearray)):
        content = Buf(IntLit(len(value)), IntLit(int.from_bytes(value, "big")))
    elif isinstance(value, Buf):
        content = value
    else:
        raise TypeError(f"a bytes argument must be a #buf term or bytes, got {value!r}")
    return [Buf(IntLit(32), content.length), content]


def abi_calldata(signature: str, args) -> Term:
    """Calldata buffer term: selector followed by the encoded arguments."""
    sig = parse_signature(signature)
    flat = _flatten(args)
    if len(flat) != sig.arg_count:
        raise AbiArityMismatch(f"{sig.text} takes {sig.arg_count} flattened argument(s), got {len(flat)}")
    segments: list[Term] = [Buf(IntLit(4), IntLit(sig.selector))]
    static = flat[: sig.static_words]
    segments += [Buf(IntLit(32), _as_term(a)) for a in static]
    if sig.trailing_bytes:
        offset = 32 * (sig.static_words + 1)
        segments.append(Buf(IntLit(32), IntLit(offset)))
        segments += _bytes_segments(flat[-1])
    if len(segments) == 1:
        return segments[0]
    return BufConcat(tuple(segments))
