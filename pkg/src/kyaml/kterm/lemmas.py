"""Lemma files: one `rule LHS => RHS [requires COND]` per line."""

from __future__ import annotations

import re
from pathlib import Path

from .parser import TermSyntaxError, parse_term
from .simplify import Lemma, LemmaError
from .terms import BOOL, TRUE

_RULE = re.compile(r"^rule\s+(?P<body>.+)$")


def _strip_comment(line: str) -> str:
    out, in_str = [], False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_str = not in_str
        if not in_str and line.startswith("//", i):
            break
        out.append(ch)
        i += 1
    return "".join(out).strip()


def parse_lemma(text: str, name: str = "") -> Lemma:
    m = _RULE.match(text.strip())
    if not m:
        raise LemmaError(f"lemma must start with 'rule': {text.strip()!r}")
    body = m.group("body")
    if "=>" not in body:
        raise LemmaError(f"lemma has no '=>': {text.strip()!r}")
    lhs_text, rest = body.split("=>", 1)
    cond_text = None
    parts = re.split(r"\brequires\b", rest, maxsplit=1)
    rhs_text = parts[0]
    if len(parts) == 2:
        cond_text = parts[1]
    try:
        lhs = parse_term(lhs_text)
        rhs = parse_term(rhs_text)
        cond = parse_term(cond_text, BOOL) if cond_text is not None else TRUE
    except TermSyntaxError as exc:
        raise LemmaError(f"cannot parse lemma {text.strip()!r}: {exc}") from exc
    return Lemma(lhs, rhs, cond, name)


def parse_lemmas(text: str, source: str = "<lemmas>") -> list[Lemma]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        try:
            out.append(parse_lemma(line))
        except LemmaError as exc:
            raise LemmaError(f"{source}:{lineno}: {exc}") from exc
    return out


def load_lemmas(path: str | Path) -> list[Lemma]:
    p = Path(path)
    return parse_lemmas(p.read_text(), str(p))
