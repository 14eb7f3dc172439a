"""Miniature stack machine: assembly, cells and the concrete interpreter."""

from ..abi import AbiArityMismatch, UnsupportedType, abi_calldata, parse_signature
from .cells import CELLS, MACHINE_INITIALIZED, REVERT, RUNNING, SUCCESS
from .machine import (
    DEFAULT_CALL_RESULT,
    DEFAULT_STEP_LIMIT,
    CallRecord,
    MachineState,
    OutOfBoundsMemory,
    StackUnderflow,
    StepLimitExceeded,
    TxResult,
    VMError,
    calldata_word,
    run_transaction,
)
from .program import (
    COMPARISONS,
    OPCODES,
    TERMINATORS,
    AssemblyError,
    BadOperand,
    Instruction,
    Program,
    UndefinedLabel,
    UnknownOpcode,
    assemble,
    load_program,
)

__all__ = [name for name in dir() if not name.startswith("_")]
