"""Symbolic execution of MiniVM programs against reachability claims."""

from .engine import Budget, BudgetExceeded, Explorer, Unsupported, WallClockExpired, explore
from .prover import (
    Counterexample,
    Entailment,
    Outcome,
    ProveOptions,
    SolverAnswer,
    Verdict,
    VerdictKind,
    check_concrete,
    check_entailment,
    find_counterexample,
    is_satisfiable,
    prove,
    replay,
)
from .sampling import Sampler, find_witness, harvest_constants
from .state import STUCK, InitError, SymState, init_state

__all__ = [name for name in dir() if not name.startswith("_")]
