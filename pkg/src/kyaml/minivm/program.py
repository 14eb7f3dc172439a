"""`.mvm` assembly: one instruction per line, `;` comments, `label:` definitions."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

# opcode -> operand kind: None (no operand), "int", "label", "opt-int" (optional immediate)
OPCODES: dict[str, str | None] = {
    "PUSH": "int",
    "POP": None,
    "DUP": "int",
    "SWAP": "int",
    "ADD": None,
    "SUB": None,
    "MUL": None,
    "GT": None,
    "LT": None,
    "EQ": None,
    "ISZERO": None,
    "AND": None,
    "OR": None,
    "NOT": None,
    "CALLDATALOAD": "opt-int",
    "CALLDATASIZE": None,
    "MLOAD": None,
    "MSTORE": None,
    "SLOAD": None,
    "SSTORE": None,
    "SHA3": None,
    "ECREC": None,
    "CALL": None,
    "JUMP": "label",
    "JUMPI": "label",
    "RETURNW": None,
    "RETURN": None,
    "REVERT": None,
    "STOP": None,
}

TERMINATORS = {"RETURNW", "RETURN", "REVERT", "STOP"}
COMPARISONS = {"GT", "LT", "EQ"}

_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*):\s*(.*)$")
_SHORT = re.compile(r"^(DUP|SWAP)(\d+)$")


class AssemblyError(Exception):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownOpcode(AssemblyError):
    pass


class BadOperand(AssemblyError):
    pass


class UndefinedLabel(AssemblyError):
    pass


@dataclass(frozen=True)
class Instruction:
    op: str
    arg: int | None = None
    label: str | None = None
    line: int = 0

    def text(self) -> str:
        if self.label is not None:
            return f"{self.op} {self.label}"
        if self.arg is not None:
            return f"{self.op} {self.arg}"
        return self.op


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    labels: dict[str, int] = field(default_factory=dict)
    name: str = "<program>"

    def __len__(self) -> int:
        return len(self.instructions)

    def target(self, ins: Instruction) -> int:
        return self.labels[ins.label]

    def to_text(self) -> str:
        """Canonical assembly; reassembles to an equal program."""
        by_index: dict[int, list[str]] = {}
        for name, idx in sorted(self.labels.items(), key=lambda kv: (kv[1], kv[0])):
            by_index.setdefault(idx, []).append(name)
        lines = []
        for i, ins in enumerate(self.instructions):
            lines += [f"{name}:" for name in by_index.get(i, [])]
            lines.append(f"    {ins.text()}")
        lines += [f"{name}:" for name in by_index.get(len(self.instructions), [])]
        return "\n".join(lines) + "\n"

    def with_instructions(self, instructions, labels=None, name=None) -> "Program":
        return Program(tuple(instructions), dict(self.labels if labels is None else labels),
                       self.name if name is None else name)

    def same_code(self, other: "Program") -> bool:
        strip = lambda p: tuple((i.op, i.arg, i.label and p.labels[i.label]) for i in p.instructions)  # noqa: E731
        return strip(self) == strip(other)


def _parse_int(text: str, line: int) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise BadOperand(f"expected an integer operand, got {text!r}", line) from None
    if value < 0:
        raise BadOperand(f"negative operand {value}", line)
    return value


def assemble(text: str, name: str = "<program>") -> Program:
    instructions: list[Instruction] = []
    labels: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        while True:
            m = _LABEL.match(line)
            if not m:
                break
            label, line = m.group(1), m.group(2).strip()
            if label in labels:
                raise BadOperand(f"label {label!r} defined twice", lineno)
            labels[label] = len(instructions)
        if not line:
            continue
        parts = line.split()
        op = parts[0].upper()
        operands = parts[1:]
        short = _SHORT.match(op)
        if short:
            op = short.group(1)
            operands = [short.group(2)] + operands
        if op not in OPCODES:
            raise UnknownOpcode(f"unknown opcode {parts[0]!r}", lineno)
        kind = OPCODES[op]
        if len(operands) > 1 or (kind in (None,) and operands) or (kind in ("int", "label") and not operands):
            raise BadOperand(f"wrong operand count for {op}", lineno)
        arg = label = None
        if kind == "label":
            label = operands[0]
        elif operands:
            arg = _parse_int(operands[0], lineno)
            if op in ("DUP", "SWAP") and not 1 <= arg <= 16:
                raise BadOperand(f"{op} depth must be within 1..16", lineno)
            if op == "PUSH" and arg >= 2**256:
                raise BadOperand("PUSH immediate exceeds 256 bits", lineno)
        instructions.append(Instruction(op, arg, label, lineno))
    for ins in instructions:
        if ins.label is not None and ins.label not in labels:
            raise UndefinedLabel(f"undefined label {ins.label!r}", ins.line)
    return Program(tuple(instructions), labels, name)


def load_program(path: str | Path) -> Program:
    p = Path(path)
    return assemble(p.read_text(), p.stem)
