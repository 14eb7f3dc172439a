"""Program mutants for stress-testing a claim suite.

Operators work on assembled MiniVM programs and produce one mutant per
applicable site. A site is the index, in the base program, of the
instruction the operator targets.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .minivm.machine import run_transaction
from .minivm.program import COMPARISONS, TERMINATORS, Instruction, Program, assemble

WORD_MAX = 2**256 - 1


class MutationOperator(str, enum.Enum):
    DUP_CALL = "DUP_CALL"
    CONST_REPLACE = "CONST_REPLACE"
    DROP_REQUIRE = "DROP_REQUIRE"
    NEGATE_BRANCH = "NEGATE_BRANCH"
    OFF_BY_ONE = "OFF_BY_ONE"
    SWAP_CMP = "SWAP_CMP"

    @property
    def description(self) -> str:
        return DESCRIPTIONS[self]

    @classmethod
    def parse(cls, text: str) -> "MutationOperator":
        try:
            return cls[text.strip().upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown mutation operator {text!r}") from None


DESCRIPTIONS = {
    MutationOperator.DUP_CALL: "repeat a CALL together with its seven argument pushes, discarding the first result",
    MutationOperator.CONST_REPLACE: "replace a PUSH immediate with 0 (or 1 when it already is 0)",
    MutationOperator.DROP_REQUIRE: "remove a comparison and JUMPI whose target block reverts, popping the operands",
    MutationOperator.NEGATE_BRANCH: "insert ISZERO before a JUMPI",
    MutationOperator.OFF_BY_ONE: "increment a PUSH immediate",
    MutationOperator.SWAP_CMP: "exchange GT and LT",
}

ALL_OPERATORS = tuple(MutationOperator)


class NoApplicableSite(Exception):
    def __init__(self, operator: MutationOperator, program: str):
        super().__init__(f"{operator.value} has no applicable site in {program}")
        self.operator = operator
        self.program = program


@dataclass(frozen=True)
class Mutant:
    base: str
    operator: MutationOperator
    site: int
    program: Program

    @property
    def mutant_id(self) -> str:
        return f"{self.base}__{self.operator.value.lower()}_{self.site}"

    @property
    def filename(self) -> str:
        return f"{self.mutant_id}.mvm"


@dataclass
class MutationReport:
    mutants: list[Mutant] = field(default_factory=list)
    skipped: list[NoApplicableSite] = field(default_factory=list)


# ---------------------------------------------------------------------------
# editing helpers


def _splice(p: Program, start: int, end: int, replacement: Sequence[Instruction], name: str) -> Program:
    """Replace instructions [start, end) and move labels so jumps keep their meaning."""
    delta = len(replacement) - (end - start)
    labels = {}
    for label, idx in p.labels.items():
        if idx <= start:
            labels[label] = idx
        elif idx >= end:
            labels[label] = idx + delta
        else:
            labels[label] = start
    ins = list(p.instructions[:start]) + list(replacement) + list(p.instructions[end:])
    return Program(tuple(ins), labels, name)


def _pushers(ins: Instruction) -> bool:
    """Instructions that push exactly one value and pop nothing."""
    return ins.op in ("PUSH", "CALLDATASIZE") or (ins.op == "CALLDATALOAD" and ins.arg is not None)


def _block_reverts(p: Program, start: int) -> bool:
    for ins in p.instructions[start:]:
        if ins.op in TERMINATORS or ins.op in ("JUMP", "JUMPI"):
            return ins.op == "REVERT"
    return False


def _require_span(p: Program, j: int) -> int | None:
    """Start of the condition feeding the conditional revert at JUMPI index j."""
    k = j - 1
    while k >= 0 and p.instructions[k].op == "ISZERO":
        k -= 1
    if k >= 0 and p.instructions[k].op in COMPARISONS:
        return k
    return k + 1 if k + 1 < j else None


# ---------------------------------------------------------------------------
# operators


def _sites(p: Program, op: MutationOperator) -> list[int]:
    ins = p.instructions
    if op == MutationOperator.DUP_CALL:
        return [i for i, x in enumerate(ins) if x.op == "CALL" and i >= 7 and all(_pushers(y) for y in ins[i - 7:i])]
    if op == MutationOperator.CONST_REPLACE:
        return [i for i, x in enumerate(ins) if x.op == "PUSH"]
    if op == MutationOperator.OFF_BY_ONE:
        return [i for i, x in enumerate(ins) if x.op == "PUSH" and x.arg < WORD_MAX]
    if op == MutationOperator.DROP_REQUIRE:
        return [i for i, x in enumerate(ins)
                if x.op == "JUMPI" and _block_reverts(p, p.target(x)) and _require_span(p, i) is not None]
    if op == MutationOperator.NEGATE_BRANCH:
        return [i for i, x in enumerate(ins) if x.op == "JUMPI"]
    if op == MutationOperator.SWAP_CMP:
        return [i for i, x in enumerate(ins) if x.op in ("GT", "LT")]
    raise ValueError(op)


def _apply(p: Program, op: MutationOperator, site: int, name: str) -> Program:
    ins = p.instructions
    x = ins[site]
    if op == MutationOperator.DUP_CALL:
        copy = list(ins[site - 7:site + 1]) + [Instruction("POP", line=x.line)]
        return _splice(p, site - 7, site - 7, copy, name)
    if op == MutationOperator.CONST_REPLACE:
        return _splice(p, site, site + 1, [Instruction("PUSH", 1 if x.arg == 0 else 0, line=x.line)], name)
    if op == MutationOperator.OFF_BY_ONE:
        return _splice(p, site, site + 1, [Instruction("PUSH", x.arg + 1, line=x.line)], name)
    if op == MutationOperator.DROP_REQUIRE:
        start = _require_span(p, site)
        pops = 2 if ins[start].op in COMPARISONS else 1
        return _splice(p, start, site + 1, [Instruction("POP", line=x.line)] * pops, name)
    if op == MutationOperator.NEGATE_BRANCH:
        return _splice(p, site, site, [Instruction("ISZERO", line=x.line)], name)
    if op == MutationOperator.SWAP_CMP:
        return _splice(p, site, site + 1, [Instruction("LT" if x.op == "GT" else "GT", line=x.line)], name)
    raise ValueError(op)


def mutate(p: Program, op: MutationOperator) -> list[Mutant]:
    """Every mutant `op` yields on `p`; raises NoApplicableSite when there is none."""
    sites = _sites(p, op)
    if not sites:
        raise NoApplicableSite(op, p.name)
    out = []
    for site in sites:
        mid = f"{p.name}__{op.value.lower()}_{site}"
        prog = _apply(p, op, site, mid)
        # every mutant must survive a round trip through the assembler
        assemble(prog.to_text(), mid)
        out.append(Mutant(p.name, op, site, prog))
    return out


def generate_mutants(p: Program, ops: Iterable[MutationOperator | str] = ALL_OPERATORS, seed: int = 0,
                     limit: int | None = None, report: MutationReport | None = None) -> list[Mutant]:
    """One mutant per applicable site of each operator, in operator then site order.

    With `limit`, at most that many sites per operator are kept, chosen by a
    generator seeded with `seed`.
    """
    rng = random.Random(seed)
    report = report if report is not None else MutationReport()
    out: list[Mutant] = []
    for op in ops:
        op = MutationOperator.parse(op) if isinstance(op, str) else op
        try:
            found = mutate(p, op)
        except NoApplicableSite as exc:
            report.skipped.append(exc)
            continue
        if limit is not None and len(found) > limit:
            keep = sorted(rng.sample(range(len(found)), limit))
            found = [found[i] for i in keep]
        out += found
    report.mutants.extend(out)
    return out


def write_mutants(mutants: Sequence[Mutant], outdir: str | Path,
                  skipped: Sequence[NoApplicableSite] = ()) -> Path:
    """Write `<base>__<op>_<site>.mvm` files plus manifest.json; returns the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in mutants:
        (outdir / m.filename).write_text(f"; {m.mutant_id}: {m.operator.description}\n" + m.program.to_text())
        entries.append({"mutant": m.mutant_id, "base": m.base, "operator": m.operator.value,
                        "site": m.site, "file": m.filename})
    manifest = {
        "mutants": entries,
        "skipped": [{"operator": s.operator.value, "program": s.program, "reason": str(s)} for s in skipped],
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# kill classification and equivalence spot checks


class KillResult(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"


def classify_kill(results: Iterable) -> KillResult:
    """PASS when at least one claim fails to prove (error or timeout) on the mutant."""
    for r in results:
        kind = getattr(r, "kind", r)
        if str(kind) != "proved true":
            return KillResult.PASS
    return KillResult.FAIL


def observable(result) -> tuple:
    """A transaction outcome with instruction addresses stripped from call records."""
    calls = tuple(c.as_value()[:2] + c.as_value()[3:] for c in result.call_log)
    return (result.status, result.output, tuple(sorted(result.storage.items())), result.refund, calls,
            tuple(result.read_log), tuple(result.write_log), result.error is None)


def distinguishing_input(base: Program, mutant: Program, inputs: Iterable[tuple]) -> tuple | None:
    """First (calldata, storage, call_results) on which the two programs behave differently."""
    for calldata, storage, call_results in inputs:
        a = run_transaction(base, calldata, storage, call_results=call_results)
        b = run_transaction(mutant, calldata, storage, call_results=call_results)
        if observable(a) != observable(b):
            return calldata, storage, call_results
    return None
