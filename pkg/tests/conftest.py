from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from kyaml import CORPUS
from kyaml.backends import compile_spec
from kyaml.kterm import (
    BOOL,
    EMPTY_MAP,
    FALSE,
    INT,
    MAP,
    POW256,
    TRUE,
    WORD_MAX,
    Apply,
    Buf,
    BufConcat,
    IntLit,
    SymVar,
    Term,
    Tuple,
    parse_lemmas,
)
from kyaml.minivm import load_program

CHOP_LEMMA = "rule chop(I) => 0 requires I ==Int pow256"
RSSTORE_LEMMA = "rule Rsstore(BYZANTIUM, NEW, CURR, ORIG) => 0 requires NEW =/=Int 0"


@pytest.fixture(scope="session")
def corpus() -> Path:
    return CORPUS


def program(name: str):
    return load_program(CORPUS / f"{name}.mvm")


def spec(name: str, *lemma_files: str):
    return compile_spec(CORPUS / f"{name}.yaml", [CORPUS / f for f in lemma_files])


def corpus_lemmas():
    return parse_lemmas(CHOP_LEMMA + "\n" + RSSTORE_LEMMA)


# ---------------------------------------------------------------------------
# random terms

INT_VARS = ("A0", "A1", "X", "Y", "DATA_LEN")
MAP_VARS = ("S", "S0")

SPECIAL_WORDS = (0, 1, 2, 27, 28, 255, 256, WORD_MAX, POW256, 2**255)
BINARY = ("+Int", "-Int", "*Int", "#and", "#or", "#byte")
COMPARE = ("==Int", "=/=Int", "<Int", "<=Int", ">Int", ">=Int")


class TermGen:
    """Depth-bounded random terms of each sort, drawn from a `random.Random`."""

    def __init__(self, rng, depth: int = 4):
        self.rng = rng
        self.depth = depth

    def word(self) -> int:
        r = self.rng
        return r.choice(SPECIAL_WORDS) if r.random() < 0.4 else r.randint(0, POW256 + 5)

    def int_leaf(self) -> Term:
        roll = self.rng.random()
        if roll < 0.45:
            return IntLit(self.word())
        if roll < 0.9:
            return SymVar(self.rng.choice(INT_VARS), INT)
        return Apply("pow256")

    def int_(self, d: int | None = None) -> Term:
        d = self.depth if d is None else d
        r = self.rng
        if d <= 0 or r.random() < 0.3:
            return self.int_leaf()
        k = r.randrange(8)
        if k == 0:
            return Apply(r.choice(BINARY), (self.int_(d - 1), self.int_(d - 1)))
        if k == 1:
            return Apply(r.choice(("chop", "#not", "keccak256")), (self.int_(d - 1),))
        if k == 2:
            return Apply("select", (self.map_(d - 1), self.int_(d - 1)))
        if k == 3:
            return Apply("#bool2word", (self.bool_(d - 1),))
        if k == 4:
            return Apply("Rsstore", (Apply("BYZANTIUM"), self.int_(d - 1), self.int_(d - 1), self.int_(d - 1)))
        if k == 5:
            return Apply("#symEcrec", tuple(self.int_(d - 1) for _ in range(4)))
        return Apply(r.choice(BINARY[:3]), (self.int_(d - 1), self.int_(d - 1)))

    def map_(self, d: int | None = None) -> Term:
        d = self.depth if d is None else d
        r = self.rng
        if d <= 0 or r.random() < 0.5:
            return SymVar(r.choice(MAP_VARS), MAP) if r.random() < 0.8 else EMPTY_MAP
        return Apply("store", (self.map_(d - 1), self.int_leaf(), self.int_(d - 1)))

    def bool_(self, d: int | None = None) -> Term:
        d = self.depth if d is None else d
        r = self.rng
        k = r.randrange(7) if d > 0 else r.randrange(2)
        if k == 0:
            return Apply(r.choice(COMPARE), (self.int_(d - 1), self.int_(d - 1)))
        if k == 1:
            return r.choice((TRUE, FALSE))
        if k == 2:
            return Apply("#rangeUInt", (IntLit(256), self.int_(d - 1)))
        if k == 3:
            return Apply("#ecrecEmpty", tuple(self.int_(d - 1) for _ in range(4)))
        if k == 4:
            return Apply(r.choice(("andBool", "orBool")), (self.bool_(d - 1), self.bool_(d - 1)))
        if k == 5:
            return Apply("notBool", (self.bool_(d - 1),))
        return Apply(r.choice(COMPARE), (self.int_(d - 1), self.int_(d - 1)))

    def buffer(self) -> Term:
        one = lambda: Buf(IntLit(self.rng.randint(0, 40)), self.int_(self.depth - 1))  # noqa: E731
        if self.rng.random() < 0.5:
            return one()
        return BufConcat(tuple(one() for _ in range(self.rng.randint(2, 3))))

    def any_(self) -> Term:
        k = self.rng.randrange(5)
        if k == 0:
            return self.bool_()
        if k == 1:
            return self.map_()
        if k == 2:
            return self.buffer()
        if k == 3:
            return Tuple(tuple(self.int_(self.depth - 1) for _ in range(self.rng.randint(0, 3))))
        return self.int_()


_rngs = st.randoms(use_true_random=False)
INT_TERMS = _rngs.map(lambda r: TermGen(r).int_())
BOOL_TERMS = _rngs.map(lambda r: TermGen(r).bool_())
ANY_TERMS = _rngs.map(lambda r: TermGen(r).any_())


def random_env(rng, small: bool = False) -> dict:
    """A concrete environment for every variable the term generators use."""
    def word():
        roll = rng.random()
        if roll < 0.3:
            return rng.choice([0, 1, 2, 27, 28, WORD_MAX, WORD_MAX - 1])
        return rng.randint(0, 7 if small else WORD_MAX)

    env = {n: word() for n in INT_VARS}
    for n in MAP_VARS:
        env[n] = {k: v for k in range(4) if (v := word()) and rng.random() < 0.5}
    return env


def calldata(signature: str, *args) -> bytes:
    from kyaml.abi import abi_calldata
    from kyaml.kterm import eval_concrete

    return eval_concrete(abi_calldata(signature, list(args)), {})


# (spec stem, program stem, lemma files) for every spec in the corpus
CORPUS_CASES = [
    ("simple00", "simple00", ()),
    ("simple02", "simple02", ()),
    ("staticarray00", "staticarray00", ()),
    ("bytes00", "bytes00", ()),
    ("requires00", "requires00", ()),
    ("requires00-verbose", "requires00", ()),
    ("keccak00", "keccak00", ()),
    ("staticloop00", "staticloop00", ()),
    ("ecrecover00", "ecrecover00", ()),
    ("ecrecoverloop00", "ecrecoverloop00", ()),
    ("ecrecoverloop00-strengthened", "ecrecoverloop00", ()),
    ("storage00", "storage00", ()),
    ("storage01", "storage01", ("rsstore.lemmas",)),
    ("storage02", "storage02", ("chop.lemmas",)),
    ("call00", "call00", ()),
]


def concrete_soundness(prog, claim, samples: int = 500, attempts: int = 50_000, seed: int = 0):
    """Run `samples` precondition-satisfying transactions; returns (checked, violations)."""
    from kyaml.minivm import run_transaction
    from kyaml.symexec.prover import check_concrete, claim_sampler, concrete_inputs

    sampler = claim_sampler(prog, claim, seed)
    checked, violations = 0, []
    for env in sampler.samples(attempts):
        cd, storage, results = concrete_inputs(claim, env)
        r = run_transaction(prog, cd, storage, call_results=results)
        reason = check_concrete(claim, env, r, cd, results)
        if reason is not None:
            violations.append((env, reason))
        checked += 1
        if checked >= samples:
            break
    return checked, violations


def claim_inputs(prog, cs, per_claim: int = 40, seed: int = 0) -> list[tuple]:
    """Concrete (calldata, storage, call_results) triples drawn from each claim's precondition."""
    from kyaml.symexec.prover import claim_sampler, concrete_inputs

    out = []
    for claim in cs:
        sampler = claim_sampler(prog, claim, seed)
        for i, env in enumerate(sampler.samples(20_000)):
            if i >= per_claim:
                break
            cd, storage, results = concrete_inputs(claim, env)
            out.append((cd, storage, tuple(results)))
    return out


# acceptance criteria record their outcome here; printed at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title}")
