"""Concrete stand-ins for the uninterpreted symbols.

These never take part in symbolic reasoning. They only give uninterpreted
functions a fixed meaning so that terms can be evaluated on concrete inputs
(counterexample replay, soundness sampling). Each one is injective on any
realistic test domain, which is all collision-freedom asks of them.
"""

from __future__ import annotations

import hashlib

_HASH_KEY = b"kyaml/keccak256-standin/v1"
_ECREC_KEY = b"kyaml/ecrecover-standin/v1"

VALID_V = (27, 28)
SSTORE_CLEAR_REFUND = 15000


def keccak(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=32, key=_HASH_KEY).digest(), "big")


def selector(signature: str) -> int:
    return keccak(signature.encode()) >> 224


def _word(value: int) -> bytes:
    return (value % 2**256).to_bytes(32, "big")


def sym_ecrec(msg_hash: int, v: int, r: int, s: int) -> int:
    """Recovered address, or 0 when the signature is unusable (v not 27/28)."""
    if v not in VALID_V:
        return 0
    digest = hashlib.blake2b(
        _word(msg_hash) + _word(v) + _word(r) + _word(s), digest_size=20, key=_ECREC_KEY
    ).digest()
    return 1 + int.from_bytes(digest, "big") % (2**160 - 1)


def ecrec_empty(msg_hash: int, v: int, r: int, s: int) -> bool:
    return sym_ecrec(msg_hash, v, r, s) == 0


def rsstore(schedule: str, new: int, current: int, original: int) -> int:
    """Byzantium SSTORE refund: clearing a nonzero slot earns the clear refund."""
    if schedule != "BYZANTIUM":
        raise ValueError(f"unsupported schedule {schedule}")
    return SSTORE_CLEAR_REFUND if current != 0 and new == 0 else 0
