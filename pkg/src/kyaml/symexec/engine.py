"""Depth-first symbolic exploration of MiniVM programs."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

from ..kterm import (
    EMPTY_BUF,
    FALSE,
    TRUE,
    Apply,
    Assumptions,
    Buf,
    BufConcat,
    IntLit,
    Lemma,
    Simplifier,
    Term,
    Tuple,
    negate,
)
from ..minivm.cells import REVERT, SUCCESS
from ..minivm.machine import MEMORY_LIMIT, STACK_LIMIT
from ..minivm.program import Program
from .state import STUCK, SymState, call_result_var

DEFAULT_STEPS = 50_000
DEFAULT_PATHS = 4096


class BudgetExceeded(Exception):
    def __init__(self, message: str, deepest_pc: int):
        super().__init__(f"{message} (deepest pc reached: {deepest_pc})")
        self.deepest_pc = deepest_pc


class WallClockExpired(BudgetExceeded):
    pass


class Unsupported(Exception):
    """A construct the symbolic engine cannot model precisely."""


class _Revert(Exception):
    """A VM fault; the path ends in EVMC_REVERT with a diagnostic flag."""


@dataclass(frozen=True)
class Budget:
    steps: int = DEFAULT_STEPS
    paths: int = DEFAULT_PATHS
    deadline: float | None = None  # absolute time.monotonic() value

    def __post_init__(self):
        if self.steps <= 0 or self.paths <= 0:
            raise ValueError("budgets must be positive")


def _lit(t: Term) -> int | None:
    return t.value if isinstance(t, IntLit) else None


def _word(t: Term) -> Term:
    return Apply("chop", (t,))


def _b2w(cond: Term) -> Term:
    return Apply("#bool2word", (cond,))


class Explorer:
    def __init__(self, program: Program, lemmas: Sequence[Lemma] = (), budget: Budget = Budget(),
                 prune: bool = True):
        self.program = program
        self.lemmas = tuple(lemmas)
        self.budget = budget
        self.prune = prune
        self.total_steps = 0
        self.deepest_pc = 0
        self.pruned = 0
        self._simplifiers: dict[tuple, Simplifier] = {}

    # -- simplification under a path condition --------------------------------

    def simplifier(self, path: tuple[Term, ...]) -> Simplifier:
        s = self._simplifiers.get(path)
        if s is None:
            if len(self._simplifiers) > 256:
                self._simplifiers.clear()
            s = self._simplifiers[path] = Simplifier(self.lemmas, Assumptions(path))
        return s

    def simp(self, st: SymState, t: Term) -> Term:
        return self.simplifier(st.path)(t)

    def feasible(self, path: tuple[Term, ...]) -> bool:
        if FALSE in path:
            return False
        if not self.prune:
            return True
        return not Assumptions(path).inconsistent

    # -- driver -------------------------------------------------------------------

    def explore(self, initial: SymState) -> list[SymState]:
        finished: list[SymState] = []
        stack = [initial]
        check_every = 64
        while stack:
            st = stack.pop()
            while not st.terminal:
                self.total_steps += 1
                self.deepest_pc = max(self.deepest_pc, st.pc)
                if self.total_steps > self.budget.steps:
                    raise BudgetExceeded(f"step budget of {self.budget.steps} exhausted", self.deepest_pc)
                if (self.budget.deadline is not None and self.total_steps % check_every == 0
                        and time.monotonic() > self.budget.deadline):
                    raise WallClockExpired("wall-clock limit reached", self.deepest_pc)
                succ = self.step(st)
                if len(succ) == 0:
                    st = None
                    break
                st = succ[0]
                # later successors are explored after the first one (false branch first)
                stack.extend(reversed(succ[1:]))
                if len(finished) + len(stack) + 1 > self.budget.paths:
                    raise BudgetExceeded(f"path budget of {self.budget.paths} exhausted", self.deepest_pc)
            if st is not None:
                finished.append(st)
        return finished

    def step(self, st: SymState) -> list[SymState]:
        try:
            return self._step(st)
        except _Revert as exc:
            return [self._revert(st, f"{exc}")]
        except Unsupported as exc:
            st.status = STUCK
            st.detail = f"unsupported at pc {st.pc}: {exc}"
            return [st]

    def _revert(self, st: SymState, error: str | None = None) -> SymState:
        st.status = REVERT
        st.output = EMPTY_BUF
        st.storage = st.init_storage
        st.refund = IntLit(0)
        st.error = error
        return st

    # -- helpers ------------------------------------------------------------------

    def _pop(self, st: SymState) -> Term:
        if not st.stack:
            raise _Revert(f"StackUnderflow: stack underflow at pc {st.pc}")
        return st.stack.pop()

    def _push(self, st: SymState, t: Term):
        if len(st.stack) >= STACK_LIMIT:
            raise _Revert(f"VMError: stack overflow at pc {st.pc}")
        st.stack.append(self.simp(st, t))

    def _offset(self, st: SymState, t: Term, what: str) -> int:
        v = _lit(self.simp(st, t))
        if v is None:
            raise Unsupported(f"symbolic {what} {t}")
        return v

    def _check_memory(self, st: SymState, offset: int, length: int):
        if length and offset + length > MEMORY_LIMIT:
            raise _Revert(f"OutOfBoundsMemory: memory access [{offset}, {offset + length}) beyond limit at pc {st.pc}")

    def _mem_bytes(self, st: SymState, offset: int, length: int) -> list[Term]:
        self._check_memory(st, offset, length)
        return [st.memory.get(offset + i, IntLit(0)) for i in range(length)]

    def _bytes_to_word(self, st: SymState, data: list[Term]) -> Term:
        """Reassemble 32 byte terms into a word."""
        first = data[0]
        if (isinstance(first, Apply) and first.symbol == "#byte"
                and all(isinstance(b, Apply) and b.symbol == "#byte" and b.args == (IntLit(i), first.args[1])
                        for i, b in enumerate(data))):
            return first.args[1]
        acc: Term = IntLit(0)
        for i, b in enumerate(data):
            if _lit(b) == 0:
                continue
            acc = Apply("+Int", (acc, Apply("*Int", (IntLit(256 ** (31 - i)), b))))
        return self.simp(st, acc)

    def _bytes_to_buffer(self, st: SymState, data: list[Term]) -> Term:
        segments: list[Term] = []
        i = 0
        while i < len(data):
            b = data[i]
            if (isinstance(b, Apply) and b.symbol == "#byte" and b.args[0] == IntLit(0) and i + 32 <= len(data)
                    and all(data[i + j] == Apply("#byte", (IntLit(j), b.args[1])) for j in range(32))):
                segments.append(Buf(IntLit(32), b.args[1]))
                i += 32
                continue
            segments.append(Buf(IntLit(1), b))
            i += 1
        if not segments:
            return EMPTY_BUF
        return self.simp(st, BufConcat(tuple(segments)))

    def _word_bytes(self, st: SymState, word: Term) -> list[Term]:
        v = _lit(word)
        if v is not None:
            return [IntLit(x) for x in v.to_bytes(32, "big")]
        return [Apply("#byte", (IntLit(i), word)) for i in range(32)]

    def _segments(self, t: Term) -> list[Term]:
        return list(t.segments) if isinstance(t, BufConcat) else [t]

    def _calldata_word(self, st: SymState, offset: int) -> Term:
        pos = 0
        window: list[Term | None] = [None] * 32
        for seg in self._segments(st.call_data):
            if pos >= offset + 32:
                break
            if not isinstance(seg, Buf):
                raise Unsupported(f"calldata segment {seg} has no known layout")
            n = _lit(self.simp(st, seg.length))
            if n is None:
                raise Unsupported(f"calldata segment {seg} has a symbolic length")
            if pos == offset and n == 32:
                return self.simp(st, _word(seg.content))
            if n > 32 and pos + n > offset and pos < offset + 32:
                content = _lit(self.simp(st, seg.content))
                if content is None:
                    raise Unsupported(f"unaligned read from {seg}")
                raw = (content % (1 << (8 * n))).to_bytes(n, "big")
                for k in range(max(0, offset - pos), min(n, offset + 32 - pos)):
                    window[pos + k - offset] = IntLit(raw[k])
            elif n <= 32:
                for k in range(max(0, offset - pos), min(n, offset + 32 - pos)):
                    window[pos + k - offset] = self.simp(st, Apply("#byte", (IntLit(32 - n + k), seg.content)))
            pos += n
        data = [b if b is not None else IntLit(0) for b in window]
        return self._bytes_to_word(st, data)

    def _calldata_size(self, st: SymState) -> Term:
        acc: Term = IntLit(0)
        for seg in self._segments(st.call_data):
            if not isinstance(seg, Buf):
                raise Unsupported(f"calldata segment {seg} has no known length")
            acc = Apply("+Int", (acc, seg.length))
        return self.simp(st, acc)

    def _branch(self, st: SymState, cond: Term) -> list[tuple[SymState, bool]]:
        """Split on a boolean condition; false side first, infeasible sides dropped."""
        c = self.simp(st, cond)
        if c == TRUE:
            return [(st, True)]
        if c == FALSE:
            return [(st, False)]
        out = []
        for taken, fact in ((False, negate(c)), (True, c)):
            path = st.path + (self.simp(st, fact),)
            if not self.feasible(path):
                self.pruned += 1
                continue
            nxt = st.fork()
            nxt.path = path
            out.append((nxt, taken))
        return out

    # -- one instruction ---------------------------------------------------------

    def _step(self, st: SymState) -> list[SymState]:
        prog = self.program
        if st.pc >= len(prog):
            st.status = SUCCESS
            st.output = EMPTY_BUF
            return [st]
        ins = prog.instructions[st.pc]
        op = ins.op
        st.steps += 1
        nxt = st.pc + 1
        pop = lambda: self._pop(st)  # noqa: E731
        push = lambda t: self._push(st, t)  # noqa: E731

        if op == "PUSH":
            push(IntLit(ins.arg))
        elif op == "POP":
            pop()
        elif op == "DUP":
            if len(st.stack) < ins.arg:
                raise _Revert(f"StackUnderflow: DUP{ins.arg} on a stack of {len(st.stack)} at pc {st.pc}")
            push(st.stack[-ins.arg])
        elif op == "SWAP":
            if len(st.stack) < ins.arg + 1:
                raise _Revert(f"StackUnderflow: SWAP{ins.arg} on a stack of {len(st.stack)} at pc {st.pc}")
            s = st.stack
            s[-1], s[-1 - ins.arg] = s[-1 - ins.arg], s[-1]
        elif op in ("ADD", "SUB", "MUL"):
            a, b = pop(), pop()
            sym = {"ADD": "+Int", "SUB": "-Int", "MUL": "*Int"}[op]
            push(_word(Apply(sym, (a, b))))
        elif op in ("GT", "LT", "EQ"):
            a, b = pop(), pop()
            sym = {"GT": ">Int", "LT": "<Int", "EQ": "==Int"}[op]
            push(_b2w(Apply(sym, (a, b))))
        elif op == "ISZERO":
            push(_b2w(Apply("==Int", (pop(), IntLit(0)))))
        elif op in ("AND", "OR"):
            a, b = pop(), pop()
            push(Apply("#and" if op == "AND" else "#or", (a, b)))
        elif op == "NOT":
            push(Apply("#not", (pop(),)))
        elif op == "CALLDATALOAD":
            offset = ins.arg if ins.arg is not None else self._offset(st, pop(), "calldata offset")
            push(self._calldata_word(st, offset))
        elif op == "CALLDATASIZE":
            push(self._calldata_size(st))
        elif op == "MLOAD":
            offset = self._offset(st, pop(), "memory offset")
            push(self._bytes_to_word(st, self._mem_bytes(st, offset, 32)))
        elif op == "MSTORE":
            offset = self._offset(st, pop(), "memory offset")
            value = pop()
            self._check_memory(st, offset, 32)
            for i, b in enumerate(self._word_bytes(st, value)):
                st.memory[offset + i] = b
        elif op == "SLOAD":
            key = pop()
            st.read_log.append(Apply("#read", (IntLit(len(st.call_log)), key)))
            push(Apply("select", (st.storage, key)))
        elif op == "SSTORE":
            key, value = pop(), pop()
            current = self.simp(st, Apply("select", (st.storage, key)))
            original = self.simp(st, Apply("select", (st.init_storage, key)))
            refund = Apply("Rsstore", (Apply("BYZANTIUM"), value, current, original))
            st.refund = self.simp(st, Apply("+Int", (st.refund, refund)))
            st.write_log.append(Apply("#write", (IntLit(len(st.call_log)), key, value)))
            st.storage = self.simp(st, Apply("store", (st.storage, key, value)))
        elif op == "SHA3":
            offset = self._offset(st, pop(), "hash offset")
            length = self._offset(st, pop(), "hash length")
            data = self._bytes_to_buffer(st, self._mem_bytes(st, offset, length))
            push(Apply("keccak256", (data,)))
        elif op == "ECREC":
            args = (pop(), pop(), pop(), pop())
            empty = Apply("#ecrecEmpty", args)
            recovered = Apply("#symEcrec", args)
            out = []
            for nxt_st, is_empty in self._branch(st, empty):
                if is_empty:
                    nxt_st.stack.append(IntLit(0))
                else:
                    nxt_st.path = nxt_st.path + (Apply("<Int", (IntLit(0), recovered)),)
                    nxt_st.stack.append(self.simp(nxt_st, recovered))
                nxt_st.pc = nxt
                out.append(nxt_st)
            return out
        elif op == "CALL":
            gas, dest, value, ao, al, ro, rl = (pop() for _ in range(7))
            index = len(st.call_log)
            st.call_log.append(Apply("#call", (IntLit(index), IntLit(st.pc), dest, value, gas, ao, al, ro, rl)))
            push(self._call_result(st, index))
        elif op == "JUMP":
            nxt = prog.target(ins)
        elif op == "JUMPI":
            cond = Apply("=/=Int", (pop(), IntLit(0)))
            out = []
            for nxt_st, taken in self._branch(st, cond):
                nxt_st.pc = prog.target(ins) if taken else nxt
                out.append(nxt_st)
            return out
        elif op == "RETURNW":
            st.output = self.simp(st, Buf(IntLit(32), pop()))
            st.status = SUCCESS
            nxt = st.pc
        elif op == "RETURN":
            offset = self._offset(st, pop(), "return offset")
            length = self._offset(st, pop(), "return length")
            st.output = self._bytes_to_buffer(st, self._mem_bytes(st, offset, length))
            st.status = SUCCESS
            nxt = st.pc
        elif op == "REVERT":
            self._revert(st)
            nxt = st.pc
        elif op == "STOP":
            st.status = SUCCESS
            st.output = EMPTY_BUF
            nxt = st.pc
        else:  # pragma: no cover
            raise Unsupported(f"opcode {op}")
        st.pc = nxt
        return [st]

    def _call_result(self, st: SymState, index: int) -> Term:
        given = st.call_results
        if isinstance(given, Tuple) and index < len(given.elements):
            return _word(given.elements[index])
        var = call_result_var(index)
        if var.name not in st.fresh:
            st.fresh[var.name] = var
            bound = Apply("andBool", (Apply("<=Int", (IntLit(0), var)), Apply("<=Int", (var, IntLit(1)))))
            st.path = st.path + (self.simp(st, bound),)
        return var


def explore(program: Program, state: SymState, budget: Budget = Budget(), lemmas: Sequence[Lemma] = (),
            prune: bool = True) -> list[SymState]:
    return Explorer(program, lemmas, budget, prune).explore(state)
