"""Configuration-cell registry shared by specs, the interpreter and the prover."""

from __future__ import annotations

from ..kterm.terms import BYTES, INT, LIST, MAP, STATUS

CELLS: dict[str, str] = {
    "callData": BYTES,
    "output": BYTES,
    "statusCode": STATUS,
    "storage": MAP,
    "refund": INT,
    "callLog": LIST,
    "readLog": LIST,
    "writeLog": LIST,
    "pc": INT,
    # return codes of external calls, one per call index
    "callResults": LIST,
}

# cells whose initial value is fixed by the machine; a precondition may only leave them open
MACHINE_INITIALIZED = {"output", "statusCode", "pc", "callLog", "readLog", "writeLog", "refund"}

SUCCESS = "EVMC_SUCCESS"
REVERT = "EVMC_REVERT"
RUNNING = "RUNNING"
