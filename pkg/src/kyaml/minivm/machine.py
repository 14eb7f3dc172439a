"""Deterministic concrete interpreter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..kterm import standins
from ..kterm.evaluate import canonical_map
from .cells import REVERT, RUNNING, SUCCESS
from .program import Program

WORD = 2**256
MASK = WORD - 1
MEMORY_LIMIT = 1 << 20
STACK_LIMIT = 1024
DEFAULT_STEP_LIMIT = 100_000
DEFAULT_CALL_RESULT = 1


class VMError(Exception):
    """Execution faults; each one ends the transaction in EVMC_REVERT."""


class StepLimitExceeded(VMError):
    pass


class StackUnderflow(VMError):
    pass


class OutOfBoundsMemory(VMError):
    pass


@dataclass(frozen=True)
class CallRecord:
    index: int
    pc: int
    dest: int
    value: int
    gas: int
    arg_offset: int
    arg_length: int
    ret_offset: int
    ret_length: int

    def as_value(self) -> tuple:
        return ("#call", self.index, self.pc, self.dest, self.value, self.gas,
                self.arg_offset, self.arg_length, self.ret_offset, self.ret_length)


@dataclass(frozen=True)
class TxResult:
    status: str
    output: bytes
    storage: dict[int, int]
    refund: int
    call_log: tuple[CallRecord, ...]
    read_log: tuple[tuple[int, int], ...]
    write_log: tuple[tuple[int, int, int], ...]
    pc: int
    steps: int
    error: str | None = None

    def cell_values(self) -> dict:
        """Cell contents in the value domain of `eval_concrete`."""
        return {
            "output": self.output,
            "statusCode": self.status,
            "storage": canonical_map(self.storage),
            "refund": self.refund,
            "callLog": tuple(c.as_value() for c in self.call_log),
            "readLog": tuple(("#read", *r) for r in self.read_log),
            "writeLog": tuple(("#write", *w) for w in self.write_log),
            "pc": self.pc,
        }


@dataclass
class MachineState:
    pc: int = 0
    stack: list[int] = field(default_factory=list)
    memory: bytearray = field(default_factory=bytearray)
    call_data: bytes = b""
    output: bytes = b""
    status: str = RUNNING
    storage: dict[int, int] = field(default_factory=dict)
    refund: int = 0
    call_log: list[CallRecord] = field(default_factory=list)
    read_log: list[tuple[int, int]] = field(default_factory=list)
    write_log: list[tuple[int, int, int]] = field(default_factory=list)

    def pop(self) -> int:
        if not self.stack:
            raise StackUnderflow(f"stack underflow at pc {self.pc}")
        return self.stack.pop()

    def push(self, value: int):
        if len(self.stack) >= STACK_LIMIT:
            raise VMError(f"stack overflow at pc {self.pc}")
        self.stack.append(value & MASK)

    def _grow(self, offset: int, length: int):
        end = offset + length
        if end > MEMORY_LIMIT:
            raise OutOfBoundsMemory(f"memory access [{offset}, {end}) beyond limit at pc {self.pc}")
        if end > len(self.memory):
            self.memory.extend(bytes(end - len(self.memory)))

    def mread(self, offset: int, length: int) -> bytes:
        if length == 0:
            return b""
        self._grow(offset, length)
        return bytes(self.memory[offset:offset + length])

    def mwrite(self, offset: int, data: bytes):
        self._grow(offset, len(data))
        self.memory[offset:offset + len(data)] = data


def calldata_word(data: bytes, offset: int) -> int:
    chunk = data[offset:offset + 32] if offset < len(data) else b""
    return int.from_bytes(chunk.ljust(32, b"\0"), "big")


def run_transaction(program: Program, calldata: bytes, storage: Mapping[int, int] | None = None,
                    step_limit: int = DEFAULT_STEP_LIMIT, call_results: Sequence[int] = ()) -> TxResult:
    if step_limit <= 0:
        raise ValueError("step limit must be positive")
    initial = canonical_map(dict(storage or {}))
    st = MachineState(call_data=bytes(calldata), storage=dict(initial))
    steps = 0
    error = None
    try:
        while st.status == RUNNING:
            if st.pc >= len(program):
                st.status = SUCCESS
                break
            steps += 1
            if steps > step_limit:
                raise StepLimitExceeded(f"step limit {step_limit} exceeded")
            _step(program, st, initial, call_results)
    except VMError as exc:
        error = f"{type(exc).__name__}: {exc}"
        st.status = REVERT
        st.output = b""
    if st.status == REVERT:
        st.storage = dict(initial)
        st.refund = 0
    return TxResult(
        status=st.status,
        output=st.output,
        storage=canonical_map(st.storage),
        refund=st.refund,
        call_log=tuple(st.call_log),
        read_log=tuple(st.read_log),
        write_log=tuple(st.write_log),
        pc=st.pc,
        steps=steps,
        error=error,
    )


def _step(program: Program, st: MachineState, initial: Mapping[int, int], call_results: Sequence[int]):
    ins = program.instructions[st.pc]
    op = ins.op
    nxt = st.pc + 1
    pop, push = st.pop, st.push
    if op == "PUSH":
        push(ins.arg)
    elif op == "POP":
        pop()
    elif op == "DUP":
        if len(st.stack) < ins.arg:
            raise StackUnderflow(f"DUP{ins.arg} on a stack of {len(st.stack)} at pc {st.pc}")
        push(st.stack[-ins.arg])
    elif op == "SWAP":
        if len(st.stack) < ins.arg + 1:
            raise StackUnderflow(f"SWAP{ins.arg} on a stack of {len(st.stack)} at pc {st.pc}")
        s = st.stack
        s[-1], s[-1 - ins.arg] = s[-1 - ins.arg], s[-1]
    elif op in ("ADD", "SUB", "MUL", "GT", "LT", "EQ", "AND", "OR"):
        a, b = pop(), pop()
        push({
            "ADD": lambda: a + b,
            "SUB": lambda: a - b,
            "MUL": lambda: a * b,
            "GT": lambda: int(a > b),
            "LT": lambda: int(a < b),
            "EQ": lambda: int(a == b),
            "AND": lambda: a & b,
            "OR": lambda: a | b,
        }[op]())
    elif op == "ISZERO":
        push(int(pop() == 0))
    elif op == "NOT":
        push(~pop())
    elif op == "CALLDATALOAD":
        offset = ins.arg if ins.arg is not None else pop()
        push(calldata_word(st.call_data, offset))
    elif op == "CALLDATASIZE":
        push(len(st.call_data))
    elif op == "MLOAD":
        push(int.from_bytes(st.mread(pop(), 32), "big"))
    elif op == "MSTORE":
        offset, value = pop(), pop()
        st.mwrite(offset, value.to_bytes(32, "big"))
    elif op == "SLOAD":
        key = pop()
        st.read_log.append((len(st.call_log), key))
        push(st.storage.get(key, 0))
    elif op == "SSTORE":
        key, value = pop(), pop()
        current = st.storage.get(key, 0)
        st.refund += standins.rsstore("BYZANTIUM", value, current, initial.get(key, 0))
        st.write_log.append((len(st.call_log), key, value))
        st.storage[key] = value
    elif op == "SHA3":
        offset, length = pop(), pop()
        push(standins.keccak(st.mread(offset, length)))
    elif op == "ECREC":
        h, v, r, s = pop(), pop(), pop(), pop()
        push(standins.sym_ecrec(h, v, r, s))
    elif op == "CALL":
        gas, dest, value, ao, al, ro, rl = (pop() for _ in range(7))
        index = len(st.call_log)
        st.call_log.append(CallRecord(index, st.pc, dest, value, gas, ao, al, ro, rl))
        code = call_results[index] if index < len(call_results) else DEFAULT_CALL_RESULT
        push(code)
    elif op == "JUMP":
        nxt = program.target(ins)
    elif op == "JUMPI":
        if pop() != 0:
            nxt = program.target(ins)
    elif op == "RETURNW":
        st.output = pop().to_bytes(32, "big")
        st.status = SUCCESS
        nxt = st.pc
    elif op == "RETURN":
        offset, length = pop(), pop()
        st.output = st.mread(offset, length)
        st.status = SUCCESS
        nxt = st.pc
    elif op == "REVERT":
        st.output = b""
        st.status = REVERT
        nxt = st.pc
    elif op == "STOP":
        st.status = SUCCESS
        nxt = st.pc
    else:  # pragma: no cover - assembler rejects unknown opcodes
        raise VMError(f"unknown opcode {op}")
    st.pc = nxt
