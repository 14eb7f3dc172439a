"""Entailment checking, verdicts, counterexamples and satisfiability."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..claims import Claim, ClaimSet
from ..kterm import (
    ANY,
    BYTES,
    FALSE,
    INT,
    LIST,
    MAP,
    TRUE,
    WILDCARD,
    Apply,
    Assumptions,
    Buf,
    BufConcat,
    IntLit,
    Lemma,
    NonTermination,
    Simplifier,
    Term,
    TermError,
    Tuple,
    eval_concrete,
    negate,
    print_term,
    simplify,
    sort_of,
    unsat,
)
from ..minivm.cells import CELLS
from ..minivm.machine import DEFAULT_STEP_LIMIT, TxResult, run_transaction
from ..minivm.program import Program
from .engine import Budget, BudgetExceeded, Explorer
from .sampling import Sampler, find_witness
from .state import STUCK, InitError, SymState, init_state

DEFAULT_TIME_LIMIT = 180.0


class VerdictKind(str, enum.Enum):
    PROVED_TRUE = "proved true"
    ERROR = "error"
    TIMEOUT = "timeout"

    def __str__(self):
        return self.value


class Outcome(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    UNKNOWN = "unknown"


class SolverAnswer(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Entailment:
    outcome: Outcome
    detail: str = ""
    stuck: Term | None = None


@dataclass(frozen=True)
class Counterexample:
    env: dict
    calldata: bytes
    storage: dict
    call_results: tuple
    result: TxResult
    reason: str

    def describe(self) -> str:
        shown = {k: v for k, v in sorted(self.env.items()) if not k.startswith("_")}
        return f"inputs {shown}, calldata 0x{self.calldata.hex()}: {self.reason}"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    detail: str = ""
    counterexample: Counterexample | None = None
    elapsed: float = 0.0
    paths: int = 0
    pruned: int = 0


# ---------------------------------------------------------------------------
# entailment


class _Stuck(Exception):
    def __init__(self, message: str, term: Term | None = None):
        super().__init__(message)
        self.term = term


def _lit(t: Term) -> int | None:
    return t.value if isinstance(t, IntLit) else None


def _segments(t: Term) -> list[Term]:
    return list(t.segments) if isinstance(t, BufConcat) else [t]


def _fits(simp: Simplifier, t: Term, bound: int) -> bool:
    lo, hi = simp._interval(t)
    return lo is not None and hi is not None and lo >= 0 and hi < bound


def _content_obligations(simp: Simplifier, n: int | None, ce: Term, ca: Term) -> list[Term]:
    if ce == WILDCARD or ce == ca:
        return []
    if n == 32:
        return [Apply("==Int", (Apply("chop", (ce,)), Apply("chop", (ca,))))]
    if n is not None:
        bound = 1 << (8 * n)
        le, la = _lit(ce), _lit(ca)
        if le is not None and la is not None:
            return [] if le % bound == la % bound else [FALSE]
        if _fits(simp, ce, bound) and _fits(simp, ca, bound):
            return [Apply("==Int", (ce, ca))]
    raise _Stuck(f"cannot compare buffer contents {ce} and {ca}", Apply("==Int", (ce, ca)) if sort_of(ce) == INT else None)


def _buffer_obligations(simp: Simplifier, exp: Term, act: Term) -> list[Term] | None:
    se, sa = _segments(exp), _segments(act)
    for s in se + sa:
        if not isinstance(s, Buf):
            raise _Stuck(f"cannot compare buffers {exp} and {act}")
    le = [_lit(s.length) for s in se]
    la = [_lit(s.length) for s in sa]
    if None not in le and None not in la:
        if sum(le) != sum(la):
            return None
        if le != la:
            return _bytewise(simp, se, sa)
    elif len(se) != len(sa):
        raise _Stuck(f"cannot align buffers {exp} and {act}")
    out = []
    for e, a, n in zip(se, sa, le):
        if _lit(e.length) is None or _lit(a.length) is None:
            out.append(Apply("==Int", (e.length, a.length)))
            if e.content != a.content and e.content != WILDCARD:
                raise _Stuck(f"cannot compare symbolic-length contents {e.content} and {a.content}")
            continue
        out += _content_obligations(simp, n, e.content, a.content)
    return out


def _byte_terms(segs: list[Buf]) -> list[Term]:
    out = []
    for s in segs:
        n = _lit(s.length)
        if n > 32:
            c = _lit(s.content)
            if c is None:
                raise _Stuck(f"cannot split buffer segment {s}")
            out += [IntLit(b) for b in (c % (1 << (8 * n))).to_bytes(n, "big")]
        else:
            out += [Apply("#byte", (IntLit(32 - n + k), s.content)) for k in range(n)]
    return out


def _bytewise(simp: Simplifier, se, sa) -> list[Term]:
    be, ba = _byte_terms(se), _byte_terms(sa)
    if len(be) > 4096:
        raise _Stuck("buffers too large to compare byte by byte")
    return [Apply("==Int", (x, y)) for x, y in zip(be, ba)]


def _store_chain(t: Term) -> tuple[Term, dict[int, Term]] | None:
    entries: dict[int, Term] = {}
    while isinstance(t, Apply) and t.symbol == "store":
        k = _lit(t.args[1])
        if k is None:
            return None
        entries.setdefault(k, t.args[2])
        t = t.args[0]
    return t, entries


def obligations(simp: Simplifier, exp: Term, act: Term, sort: str) -> list[Term] | None:
    """Boolean obligations under which `act` matches `exp`; None on a definite mismatch."""
    if exp == WILDCARD:
        return []
    exp, act = simp(exp), simp(act)
    if exp == act:
        return []
    if sort == ANY:
        sort = sort_of(exp) if sort_of(exp) != ANY else sort_of(act)
    if sort == INT:
        return [Apply("==Int", (exp, act))]
    if sort == BYTES:
        return _buffer_obligations(simp, exp, act)
    if sort == MAP:
        ce, ca = _store_chain(exp), _store_chain(act)
        if ce is None or ca is None or ce[0] != ca[0]:
            raise _Stuck(f"cannot compare maps {exp} and {act}")
        base = ce[0]
        out = []
        for k in sorted(set(ce[1]) | set(ca[1])):
            default = Apply("select", (base, IntLit(k)))
            out.append(Apply("==Int", (ce[1].get(k, default), ca[1].get(k, default))))
        return out
    if isinstance(exp, Tuple) and isinstance(act, Tuple):
        if len(exp.elements) != len(act.elements):
            return None
        out = []
        for e, a in zip(exp.elements, act.elements):
            sub = obligations(simp, e, a, ANY)
            if sub is None:
                return None
            out += sub
        return out
    if isinstance(exp, Apply) and isinstance(act, Apply):
        if exp.symbol != act.symbol or len(exp.args) != len(act.args):
            return None
        if not exp.args:
            return None
        out = []
        for e, a in zip(exp.args, act.args):
            sub = obligations(simp, e, a, INT if sort_of(e) in (INT, ANY) else sort_of(e))
            if sub is None:
                return None
            out += sub
        return out
    if sort == LIST and isinstance(exp, Tuple) != isinstance(act, Tuple):
        raise _Stuck(f"cannot compare lists {exp} and {act}")
    raise _Stuck(f"cannot compare {exp} and {act}")


def check_entailment(state: SymState, claim: Claim, lemmas: Sequence[Lemma] = ()) -> Entailment:
    """Does terminal `state` satisfy the claim's postcondition?"""
    facts = Assumptions(state.path)
    if facts.inconsistent:
        return Entailment(Outcome.HOLDS, "infeasible path")
    if state.status == STUCK:
        return Entailment(Outcome.UNKNOWN, state.detail or "stuck")
    simp = Simplifier(lemmas, facts)
    pending: list[tuple[str, Term]] = []
    try:
        for cell, expected in claim.post.items():
            obs = obligations(simp, expected, state.cell(cell), CELLS[cell])
            if obs is None:
                return _violated(state, f"cell {cell}: expected {print_term(expected, CELLS[cell])}, "
                                        f"got {print_term(simp(state.cell(cell)), CELLS[cell])}")
            pending += [(cell, ob) for ob in obs]
        pending += [("ensures", t) for t in claim.ensures]
    except _Stuck as exc:
        return Entailment(Outcome.UNKNOWN, str(exc), exc.term)
    except NonTermination as exc:
        return Entailment(Outcome.UNKNOWN, str(exc))
    for where, ob in pending:
        try:
            s = simp(ob)
        except NonTermination as exc:
            return Entailment(Outcome.UNKNOWN, str(exc), ob)
        if s == TRUE or facts.entails(s):
            continue
        if s == FALSE or facts.entails(negate(s)):
            return _violated(state, f"{where}: obligation {print_term(ob)} is false on this path")
        return Entailment(Outcome.UNKNOWN, f"{where}: {print_term(s)}", s)
    return Entailment(Outcome.HOLDS)


def _violated(state: SymState, detail: str) -> Entailment:
    if is_satisfiable(state.path) == SolverAnswer.SAT:
        return Entailment(Outcome.VIOLATED, detail)
    return Entailment(Outcome.UNKNOWN, f"{detail} (path feasibility unknown)")


# ---------------------------------------------------------------------------
# satisfiability


def is_satisfiable(constraints: Sequence[Term], attempts: int = 2000, seed: int = 0) -> SolverAnswer:
    constraints = tuple(constraints)
    try:
        simplified = [simplify(c) for c in constraints]
    except (NonTermination, TermError):
        return SolverAnswer.UNKNOWN
    if any(s == FALSE for s in simplified):
        return SolverAnswer.UNSAT
    if all(s == TRUE for s in simplified):
        return SolverAnswer.SAT
    if unsat(simplified):
        return SolverAnswer.UNSAT
    if find_witness(constraints, attempts, seed) is not None:
        return SolverAnswer.SAT
    return SolverAnswer.UNKNOWN


# ---------------------------------------------------------------------------
# concrete checking


def match_concrete(expected: Term, actual, env: Mapping) -> bool:
    """Does a concrete cell value match an expected term (which may hold wildcards)?"""
    if expected == WILDCARD:
        return True
    if isinstance(expected, Tuple):
        return (isinstance(actual, tuple) and len(actual) == len(expected.elements)
                and all(match_concrete(e, a, env) for e, a in zip(expected.elements, actual)))
    if isinstance(expected, Apply) and expected.symbol in ("#call", "#read", "#write"):
        return (isinstance(actual, tuple) and actual and actual[0] == expected.symbol
                and len(actual) == len(expected.args) + 1
                and all(match_concrete(e, a, env) for e, a in zip(expected.args, actual[1:])))
    if isinstance(expected, Buf) and expected.content == WILDCARD:
        return isinstance(actual, bytes) and len(actual) == eval_concrete(expected.length, env)
    return eval_concrete(expected, env) == actual


def concrete_inputs(claim: Claim, env: Mapping) -> tuple[bytes, dict, tuple]:
    def pre(cell, default):
        t = claim.pre.get(cell, WILDCARD)
        return default if t == WILDCARD else eval_concrete(t, env)

    calldata = pre("callData", env.get("_CALLDATA", b""))
    storage = pre("storage", {})
    call_results = pre("callResults", ())
    return calldata, storage, tuple(call_results)


def check_concrete(claim: Claim, env: Mapping, result: TxResult, calldata: bytes,
                   call_results: tuple = ()) -> str | None:
    """Reason the concrete run violates the claim, or None if it satisfies it."""
    values = result.cell_values()
    values["callData"] = calldata
    values["callResults"] = call_results
    for cell, expected in claim.post.items():
        if not match_concrete(expected, values[cell], env):
            return f"cell {cell} is {values[cell]!r}"
    for t in claim.ensures:
        if not eval_concrete(t, env):
            return f"ensures {print_term(t)} is false"
    return None


def _program_constants(program: Program) -> list[int]:
    return [i.arg for i in program.instructions if i.op == "PUSH"]


def claim_sampler(program: Program, claim: Claim, seed: int = 0) -> Sampler:
    post_terms = list(claim.post.values()) + list(claim.ensures)
    from .sampling import harvest_constants

    constants = harvest_constants(list(claim.pre.values()) + post_terms, _program_constants(program))
    return Sampler(claim.requires, claim.variables, constants, seed)


def find_counterexample(program: Program, claim: Claim, attempts: int = 500, seed: int = 0,
                        step_limit: int = DEFAULT_STEP_LIMIT, deadline: float | None = None) -> Counterexample | None:
    """First sampled concrete transaction whose run violates the claim."""
    sampler = claim_sampler(program, claim, seed)
    for attempt in range(attempts):
        if deadline is not None and time.monotonic() > deadline:
            return None
        env = sampler.candidate(attempt)
        if not sampler.satisfies(env):
            continue
        try:
            calldata, storage, call_results = concrete_inputs(claim, env)
        except (TermError, TypeError, ValueError):
            continue
        result = run_transaction(program, calldata, storage, step_limit, call_results)
        try:
            reason = check_concrete(claim, env, result, calldata, call_results)
        except (TermError, TypeError, ValueError):
            continue
        if reason is not None:
            return Counterexample(env, calldata, storage, call_results, result, reason)
    return None


def replay(program: Program, claim: Claim, cex: Counterexample, step_limit: int = DEFAULT_STEP_LIMIT) -> str | None:
    result = run_transaction(program, cex.calldata, cex.storage, step_limit, cex.call_results)
    return check_concrete(claim, cex.env, result, cex.calldata, cex.call_results)


# ---------------------------------------------------------------------------
# proving


@dataclass
class ProveOptions:
    budget: Budget = field(default_factory=Budget)
    time_limit: float | None = DEFAULT_TIME_LIMIT
    prune: bool = True
    counterexample_attempts: int = 300
    seed: int = 0


def prove(program: Program, cs: ClaimSet, claim_name: str, lemmas: Sequence[Lemma] | None = None,
          options: ProveOptions | None = None) -> Verdict:
    opts = options or ProveOptions()
    start = time.monotonic()
    deadline = start + opts.time_limit if opts.time_limit else None
    lemmas = tuple(cs.lemmas if lemmas is None else lemmas)
    claim = cs.get(claim_name)
    budget = Budget(opts.budget.steps, opts.budget.paths, deadline)

    def done(kind, detail="", cex=None, paths=0, pruned=0):
        return Verdict(kind, detail, cex, time.monotonic() - start, paths, pruned)

    try:
        initial = init_state(program, claim)
    except (InitError, TermError) as exc:
        return done(VerdictKind.ERROR, f"cannot initialize: {exc}")
    explorer = Explorer(program, lemmas, budget, opts.prune)
    try:
        finals = explorer.explore(initial)
    except BudgetExceeded as exc:
        return done(VerdictKind.TIMEOUT, str(exc))
    except NonTermination as exc:
        return done(VerdictKind.ERROR, str(exc))

    failure: Entailment | None = None
    for st in finals:
        if deadline is not None and time.monotonic() > deadline:
            return done(VerdictKind.TIMEOUT, "wall-clock limit reached while checking postconditions",
                        paths=len(finals), pruned=explorer.pruned)
        result = check_entailment(st, claim, lemmas)
        if result.outcome == Outcome.HOLDS:
            continue
        if failure is None or (result.outcome == Outcome.VIOLATED and failure.outcome != Outcome.VIOLATED):
            failure = result
    if failure is None:
        return done(VerdictKind.PROVED_TRUE, f"{len(finals)} path(s)", paths=len(finals), pruned=explorer.pruned)

    cex = None
    if opts.counterexample_attempts:
        cex = find_counterexample(program, claim, opts.counterexample_attempts, opts.seed, deadline=deadline)
    if failure.outcome == Outcome.VIOLATED:
        detail = f"postcondition violated: {failure.detail}"
    else:
        detail = f"unproven obligation: {failure.detail}"
    if cex is not None:
        detail += f"; counterexample: {cex.describe()}"
    return done(VerdictKind.ERROR, detail, cex, len(finals), explorer.pruned)
