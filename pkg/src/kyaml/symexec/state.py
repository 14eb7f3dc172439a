"""Symbolic machine states and their initialization from a claim."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..claims import Claim
from ..kterm import (
    ANY,
    BYTES,
    EMPTY_BUF,
    INT,
    LIST,
    MAP,
    Apply,
    IntLit,
    SortMismatch,
    SymVar,
    Term,
    Tuple,
    WILDCARD,
    simplify,
    sort_of,
)
from ..minivm.cells import CELLS, MACHINE_INITIALIZED, RUNNING
from ..minivm.program import Program

STUCK = "STUCK"


class InitError(Exception):
    pass


@dataclass
class SymState:
    pc: int
    stack: list[Term]
    memory: dict[int, Term]
    call_data: Term
    output: Term
    status: str
    storage: Term
    init_storage: Term
    refund: Term
    call_log: list[Term]
    read_log: list[Term]
    write_log: list[Term]
    call_results: Term
    path: tuple[Term, ...]
    steps: int = 0
    error: str | None = None
    detail: str | None = None
    fresh: dict[str, Term] = field(default_factory=dict)

    def fork(self) -> "SymState":
        return replace(
            self,
            stack=list(self.stack),
            memory=dict(self.memory),
            call_log=list(self.call_log),
            read_log=list(self.read_log),
            write_log=list(self.write_log),
            fresh=dict(self.fresh),
        )

    @property
    def terminal(self) -> bool:
        return self.status != RUNNING

    def cell(self, name: str) -> Term:
        """Current value of a configuration cell as a term."""
        return {
            "callData": lambda: self.call_data,
            "output": lambda: self.output,
            "statusCode": lambda: Apply(self.status),
            "storage": lambda: self.storage,
            "refund": lambda: self.refund,
            "callLog": lambda: Tuple(tuple(self.call_log)),
            "readLog": lambda: Tuple(tuple(self.read_log)),
            "writeLog": lambda: Tuple(tuple(self.write_log)),
            "pc": lambda: IntLit(self.pc),
            "callResults": lambda: self.call_results,
        }[name]()


_INITIAL = {
    "output": EMPTY_BUF,
    "refund": IntLit(0),
    "callLog": Tuple(()),
    "readLog": Tuple(()),
    "writeLog": Tuple(()),
    "pc": IntLit(0),
}


def _check_sort(cell: str, t: Term):
    want, got = CELLS[cell], sort_of(t)
    if got not in (want, ANY):
        raise SortMismatch(f"cell {cell} holds {want}, but the precondition gives {t} of sort {got}")


def init_state(program: Program, claim: Claim) -> SymState:
    """Initial symbolic state: pre-cells as given, other inputs fresh, requires as the path condition."""
    pre = {}
    for cell, term in claim.pre.items():
        if cell not in CELLS:
            raise InitError(f"unknown cell {cell!r}")
        _check_sort(cell, term)
        pre[cell] = simplify(term)
    for cell in MACHINE_INITIALIZED:
        term = pre.get(cell, WILDCARD)
        if term == WILDCARD:
            continue
        if cell == "statusCode" or term != _INITIAL[cell]:
            raise InitError(f"the initial {cell} is fixed by the machine; the precondition may only leave it open")

    def given(cell: str, fresh: Term) -> Term:
        term = pre.get(cell, WILDCARD)
        return fresh if term == WILDCARD else term

    storage = given("storage", SymVar("_STORAGE", MAP))
    return SymState(
        pc=0,
        stack=[],
        memory={},
        call_data=given("callData", SymVar("_CALLDATA", BYTES)),
        output=EMPTY_BUF,
        status=RUNNING,
        storage=storage,
        init_storage=storage,
        refund=IntLit(0),
        call_log=[],
        read_log=[],
        write_log=[],
        call_results=given("callResults", SymVar("_CALLRESULTS", LIST)),
        path=tuple(simplify(t) for t in claim.requires),
    )


def call_result_var(index: int) -> SymVar:
    return SymVar(f"_CALLRES{index}", INT)
