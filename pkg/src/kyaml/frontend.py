"""K-YAML documents: loading, validation and inheritance resolution.

A document is a YAML sequence of blocks::

    - name: base
      if:
        match: {callData: '#abiCallData2("execute(uint256)", A0)'}
        where: ["#rangeUInt(256, A0)"]
    - name: a0gt0
      inherits: base
      if:   {where: ["A0 >Int 0"]}
      then: {match: {statusCode: EVMC_SUCCESS, output: "#buf(32, 5)"}}

Terms are plain YAML strings in the term grammar. A `where` entry may also
be a mapping `{not: TERM}`, shorthand for `notBool TERM`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .kterm import BOOL, Apply, SymVar, Term, TermError, free_vars, parse_term, subterms
from .minivm.cells import CELLS

BLOCK_KEYS = {"name", "inherits", "if", "then"}
CLAUSE_KEYS = {"match", "where"}


class SpecError(Exception):
    pass


class YamlSyntax(SpecError):
    pass


class UnknownKey(SpecError):
    pass


class DuplicateName(SpecError):
    pass


class MissingName(SpecError):
    pass


class TermParse(SpecError):
    def __init__(self, block: str, location: str, cause: Exception):
        super().__init__(f"block {block!r}, {location}: {cause}")
        self.block = block
        self.location = location
        self.cause = cause


class SpecValidationError(SpecError):
    def __init__(self, diagnostics: list["Diagnostic"]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class CellClause:
    match: dict[str, Term] = field(default_factory=dict)
    where: tuple[Term, ...] = ()

    def terms(self):
        yield from self.match.values()
        yield from self.where


@dataclass(frozen=True)
class SpecBlock:
    name: str
    inherits: str | None = None
    pre: CellClause = field(default_factory=CellClause)
    post: CellClause = field(default_factory=CellClause)


@dataclass(frozen=True)
class ResolvedBlock:
    name: str
    pre: CellClause
    post: CellClause
    abstract: bool = False


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    code: str
    block: str
    message: str

    def __str__(self):
        return f"{self.severity}: [{self.code}] block {self.block!r}: {self.message}"


# ---------------------------------------------------------------------------
# loading


def _parse(block: str, location: str, text, expected: str) -> Term:
    if not isinstance(text, (str, int)) or isinstance(text, bool):
        raise TermParse(block, location, TypeError(f"expected a term string, got {text!r}"))
    try:
        return parse_term(str(text), expected)
    except TermError as exc:
        raise TermParse(block, location, exc) from exc


def _clause(block: str, side: str, raw) -> CellClause:
    if raw is None:
        return CellClause()
    if not isinstance(raw, dict):
        raise UnknownKey(f"block {block!r}: '{side}' must be a mapping")
    extra = set(raw) - CLAUSE_KEYS
    if extra:
        raise UnknownKey(f"block {block!r}: unknown key(s) under '{side}': {sorted(extra)}")
    match = {}
    raw_match = raw.get("match") or {}
    if not isinstance(raw_match, dict):
        raise UnknownKey(f"block {block!r}: '{side}.match' must be a mapping")
    for cell, text in raw_match.items():
        # unknown cells are parsed leniently and reported by validate()
        match[str(cell)] = _parse(block, f"{side}.match.{cell}", text, CELLS.get(cell, "K"))
    where = []
    raw_where = raw.get("where") or []
    if not isinstance(raw_where, list):
        raw_where = [raw_where]
    for i, item in enumerate(raw_where):
        loc = f"{side}.where[{i}]"
        if isinstance(item, dict):
            if set(item) != {"not"}:
                raise UnknownKey(f"block {block!r}: {loc} mapping must have the single key 'not'")
            where.append(Apply("notBool", (_parse(block, loc, item["not"], BOOL),)))
        else:
            where.append(_parse(block, loc, item, BOOL))
    return CellClause(match, tuple(where))


def load_document(text: str) -> list[SpecBlock]:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise YamlSyntax(str(exc)) from exc
    if data is None:
        return []
    if not isinstance(data, list):
        raise YamlSyntax("the document root must be a sequence of spec blocks")
    blocks: list[SpecBlock] = []
    seen: set[str] = set()
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise YamlSyntax(f"block #{i} is not a mapping")
        if "name" not in raw or raw["name"] in (None, ""):
            raise MissingName(f"block #{i} has no name")
        name = str(raw["name"])
        extra = set(raw) - BLOCK_KEYS
        if extra:
            raise UnknownKey(f"block {name!r}: unknown key(s) {sorted(extra)}")
        if name in seen:
            raise DuplicateName(f"block name {name!r} used twice")
        seen.add(name)
        inherits = raw.get("inherits")
        if isinstance(inherits, list):
            raise UnknownKey(f"block {name!r}: multiple inheritance is not supported")
        blocks.append(SpecBlock(
            name=name,
            inherits=str(inherits) if inherits is not None else None,
            pre=_clause(name, "if", raw.get("if")),
            post=_clause(name, "then", raw.get("then")),
        ))
    return blocks


def load_spec(path: str | Path) -> list[SpecBlock]:
    return load_document(Path(path).read_text())


# ---------------------------------------------------------------------------
# validation


def _chain(block: SpecBlock, by_name: dict[str, SpecBlock]) -> list[SpecBlock] | None:
    """Ancestors root-first ending with `block`; None on a cycle or dangling link."""
    chain = [block]
    seen = {block.name}
    cur = block
    while cur.inherits is not None:
        parent = by_name.get(cur.inherits)
        if parent is None or parent.name in seen:
            return None
        seen.add(parent.name)
        chain.append(parent)
        cur = parent
    return chain[::-1]


def _var_sorts(terms) -> dict[str, set[str]]:
    sorts: dict[str, set[str]] = {}
    for t in terms:
        for s in subterms(t):
            if isinstance(s, SymVar) and not s.is_wildcard:
                sorts.setdefault(s.name, set()).add(s.sort)
    return sorts


def validate(blocks: list[SpecBlock]) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    by_name = {b.name: b for b in blocks}
    for b in blocks:
        if b.inherits is not None and b.inherits not in by_name:
            out.append(Diagnostic("error", "dangling-inherits", b.name, f"inherits unknown block {b.inherits!r}"))
        for side, clause in (("if", b.pre), ("then", b.post)):
            for cell in clause.match:
                if cell not in CELLS:
                    out.append(Diagnostic("error", "unknown-cell", b.name, f"unknown cell {cell!r} under '{side}'"))
    reported_cycles: set[frozenset] = set()
    for b in blocks:
        seen, cur = [], b
        while cur is not None and cur.name not in seen:
            seen.append(cur.name)
            cur = by_name.get(cur.inherits) if cur.inherits else None
        if cur is not None:
            cycle = frozenset(seen[seen.index(cur.name):])
            if cycle not in reported_cycles:
                reported_cycles.add(cycle)
                path = " -> ".join(seen[seen.index(cur.name):] + [cur.name])
                out.append(Diagnostic("error", "cycle", cur.name, f"inheritance cycle {path}"))
    for b in blocks:
        chain = _chain(b, by_name)
        if chain is None:
            continue
        pre_terms = [t for blk in chain for t in blk.pre.terms()]
        post_terms = [t for blk in chain for t in blk.post.terms()]
        for name, sorts in sorted(_var_sorts(pre_terms + post_terms).items()):
            if len(sorts) > 1:
                out.append(Diagnostic("error", "sort", b.name, f"variable {name} used with sorts {sorted(sorts)}"))
        for cell, term in ((c, t) for blk in chain for c, t in blk.pre.match.items()):
            expected = CELLS.get(cell)
            if expected and isinstance(term, SymVar) and not term.is_wildcard and term.sort != expected:
                out.append(Diagnostic("error", "sort", b.name, f"cell {cell} expects {expected}, got {term}"))
        bound = {v.name for t in pre_terms for v in free_vars(t)}
        unbound = sorted({v.name for t in post_terms for v in free_vars(t)} - bound)
        if unbound:
            out.append(Diagnostic("warning", "unbound-variable", b.name,
                                  f"variables {unbound} appear in 'then' but are never bound in 'if'"))
    return out


# ---------------------------------------------------------------------------
# resolution


def _merge(parent: CellClause, child: CellClause) -> CellClause:
    match = dict(parent.match)
    match.update(child.match)
    return CellClause(match, parent.where + child.where)


def resolve_inheritance(blocks) -> list[ResolvedBlock]:
    """Merge each block with its ancestors; child cells override, where lists concatenate."""
    if all(isinstance(b, ResolvedBlock) for b in blocks):
        return list(blocks)
    errors = [d for d in validate(blocks) if d.severity == "error"]
    if errors:
        raise SpecValidationError(errors)
    by_name = {b.name: b for b in blocks}
    parents = {b.inherits for b in blocks if b.inherits}
    out = []
    for b in blocks:
        pre, post = CellClause(), CellClause()
        for blk in _chain(b, by_name):
            pre = _merge(pre, blk.pre)
            post = _merge(post, blk.post)
        out.append(ResolvedBlock(b.name, pre, post, abstract=b.name in parents))
    return out
