import random

import pytest

from conftest import CHOP_LEMMA, CORPUS_CASES, calldata, concrete_soundness, corpus_lemmas, program, spec
from kyaml.claims import Claim, ClaimSet, expand
from kyaml.frontend import load_document
from kyaml.kterm import POW256, SymVar, eval_concrete, free_vars, parse_lemmas, parse_term, print_term
from kyaml.minivm import REVERT, SUCCESS, assemble, run_transaction
from kyaml.mutagen import MutationOperator, mutate
from kyaml.symexec import (
    Budget,
    Outcome,
    ProveOptions,
    SolverAnswer,
    VerdictKind,
    check_entailment,
    explore,
    find_counterexample,
    init_state,
    is_satisfiable,
    prove,
    replay,
)

QUICK = ProveOptions(time_limit=30)


def terms(*texts):
    return [parse_term(t) for t in texts]


# --- initial states ---------------------------------------------------------


def test_init_simple02():
    st = init_state(program("simple02"), spec("simple02").get("simple02"))
    segs = st.call_data.segments
    assert print_term(segs[1]) == "#buf(32, A0)"
    assert eval_concrete(segs[0], {}) == calldata("execute(uint256)", 0)[:4]
    assert st.path == (parse_term(f"0 <=Int A0 andBool A0 <Int {POW256}"),)


def test_init_empty_pre_is_fresh():
    st = init_state(program("simple00"), Claim("empty", {}, (), {}, ()))
    assert isinstance(st.call_data, SymVar) and isinstance(st.storage, SymVar)
    assert st.path == ()


def test_init_storage_is_symbolic_map():
    st = init_state(program("storage00"), spec("storage00").claims[0])
    assert st.storage == SymVar("S", "Map")


def test_init_rejects_machine_cells():
    (c,) = expand(load_document("- name: a\n  if:\n    match:\n      refund: 7\n"))
    from kyaml.symexec import InitError

    with pytest.raises(InitError):
        init_state(program("simple00"), c)


# --- exploration ------------------------------------------------------------


def test_requires00_has_two_paths():
    p = program("requires00")
    st = init_state(p, Claim("open", {"callData": spec("requires00").get("a0gt0").pre["callData"]}, (), {}, ()))
    finals = explore(p, st, prune=False)
    assert sorted(f.status for f in finals) == sorted([SUCCESS, REVERT])


def test_straight_line_has_one_path():
    p = program("simple00")
    assert len(explore(p, init_state(p, spec("simple00").claims[0]))) == 1


def test_static_loop_unrolls():
    p = program("staticloop00")
    finals = explore(p, init_state(p, spec("staticloop00").get("success")))
    assert len(finals) == 1
    (f,) = finals
    assert f.status == SUCCESS
    assert f.output.content == parse_term("A0 +Int 3")
    assert parse_term("A0 <Int 10") in f.path


def test_unbounded_loop_times_out():
    p = assemble("loop:\nJUMP loop")
    cs = ClaimSet((Claim("never", {}, (), {"statusCode": parse_term("EVMC_SUCCESS")}, ()),))
    v = prove(p, cs, "never", options=ProveOptions(Budget(steps=2000)))
    assert v.kind == VerdictKind.TIMEOUT


def test_symbolic_loop_bound_times_out():
    p = assemble("CALLDATALOAD 4\nloop:\nDUP 1\nISZERO\nJUMPI done\nPUSH 1\nSWAP 1\nSUB\nJUMP loop\ndone:\nSTOP")
    pre = {"callData": parse_term('#abiCallData2("execute(uint256)", (A0,))')}
    cs = ClaimSet((Claim("x", pre, terms("#rangeUInt(256, A0)"), {"statusCode": parse_term("EVMC_SUCCESS")}),))
    v = prove(p, cs, "x", options=ProveOptions(Budget(steps=5000, paths=64)))
    assert v.kind == VerdictKind.TIMEOUT


def _loop_free(p):
    return all(p.target(i) > k for k, i in enumerate(p.instructions) if i.op in ("JUMP", "JUMPI"))


def test_path_count_bound_on_loop_free_programs():
    for spec_name, prog_name, _ in CORPUS_CASES:
        p = program(prog_name)
        if not _loop_free(p):
            continue
        jumpis = sum(i.op == "JUMPI" for i in p.instructions)
        for c in spec(spec_name):
            finals = explore(p, init_state(p, c), prune=False)
            assert len(finals) <= 2**jumpis, (spec_name, c.name)


# --- entailment -------------------------------------------------------------


def _overflow_terminal(lemmas):
    p = program("storage02")
    c = spec("storage02").get("overflow")
    (f,) = explore(p, init_state(p, c), lemmas=lemmas)
    return f, c


def test_entailment_chop_lemma_holds():
    lemmas = parse_lemmas(CHOP_LEMMA)
    f, c = _overflow_terminal(lemmas)
    assert check_entailment(f, c, lemmas).outcome == Outcome.HOLDS


def test_entailment_without_chop_lemma_is_unknown():
    f, c = _overflow_terminal(())
    e = check_entailment(f, c, ())
    assert e.outcome == Outcome.UNKNOWN
    assert "chop" in e.detail


def test_entailment_contradictory_path_holds_vacuously():
    from dataclasses import replace

    p = program("requires00")
    c = spec("requires00").get("a0gt0")
    open_claim = Claim("open", c.pre, terms("#rangeUInt(256, A0)"), {})
    (reverted,) = [f for f in explore(p, init_state(p, open_claim)) if f.status == REVERT]
    # the revert branch conjoined with the a0gt0 precondition is contradictory
    contradictory = replace(reverted, path=reverted.path + tuple(terms("A0 >Int 0")))
    assert is_satisfiable(contradictory.path) == SolverAnswer.UNSAT
    assert check_entailment(contradictory, c).outcome == Outcome.HOLDS
    assert check_entailment(reverted, c).outcome == Outcome.VIOLATED


def test_entailment_violation_needs_feasible_path():
    p = program("requires00")
    wrong = Claim("wrong", spec("requires00").get("a0gt0").pre, terms("#rangeUInt(256, A0)"),
                  {"statusCode": parse_term("EVMC_SUCCESS")})
    finals = explore(p, init_state(p, wrong))
    outcomes = sorted(check_entailment(f, wrong).outcome.value for f in finals)
    assert outcomes == sorted([Outcome.HOLDS.value, Outcome.VIOLATED.value])


# --- proving ----------------------------------------------------------------


def test_prove_simple00():
    v = prove(program("simple00"), spec("simple00"), "simple00")
    assert v.kind == VerdictKind.PROVED_TRUE and v.counterexample is None


def test_refund_needs_rsstore_lemma():
    without = prove(program("storage01"), spec("storage01"), "storage01", options=QUICK)
    assert without.kind == VerdictKind.ERROR
    assert "unproven obligation" in without.detail and "Rsstore(BYZANTIUM" in without.detail
    assert without.counterexample is None
    with_lemma = prove(program("storage01"), spec("storage01", "rsstore.lemmas"), "storage01")
    assert with_lemma.kind == VerdictKind.PROVED_TRUE


def test_overflow_needs_chop_lemma():
    without = prove(program("storage02"), spec("storage02"), "overflow", options=QUICK)
    assert without.kind == VerdictKind.ERROR and "chop" in without.detail
    assert prove(program("storage02"), spec("storage02", "chop.lemmas"), "overflow").kind == VerdictKind.PROVED_TRUE


def test_verdict_kinds_print_like_the_tables():
    assert [str(k) for k in VerdictKind] == ["proved true", "error", "timeout"]


@pytest.mark.parametrize("spec_name, prog_name, lemma_files", CORPUS_CASES)
def test_corpus_proves(spec_name, prog_name, lemma_files):
    cs = spec(spec_name, *lemma_files)
    for name in cs.names():
        v = prove(program(prog_name), cs, name)
        assert v.kind == VerdictKind.PROVED_TRUE, (name, v.detail)


@pytest.mark.parametrize("spec_name, prog_name, lemma_files", CORPUS_CASES)
def test_soundness_against_concrete_runs(spec_name, prog_name, lemma_files):
    cs = spec(spec_name, *lemma_files)
    p = program(prog_name)
    for c in cs:
        assert prove(p, cs, c.name).kind == VerdictKind.PROVED_TRUE
        checked, violations = concrete_soundness(p, c, 500)
        assert checked == 500 and violations == [], c.name


@pytest.mark.parametrize("spec_name, prog_name, lemma_files", CORPUS_CASES)
def test_pruning_off_keeps_proofs(spec_name, prog_name, lemma_files):
    cs = spec(spec_name, *lemma_files)
    for name in cs.names():
        v = prove(program(prog_name), cs, name, options=ProveOptions(prune=False, time_limit=60))
        assert v.kind != VerdictKind.ERROR, (name, v.detail)


def test_corpus_lemmas_are_concretely_valid():
    rng = random.Random(3)
    for lemma in corpus_lemmas():
        names = sorted(v.name for v in free_vars(lemma.lhs))
        for _ in range(2000):
            env = {n: rng.choice([0, 1, 5, POW256 - 1, POW256, rng.randrange(POW256)]) for n in names}
            if eval_concrete(lemma.condition, env):
                assert eval_concrete(lemma.lhs, env) == eval_concrete(lemma.rhs, env)


@pytest.mark.parametrize("spec_name, prog_name, lemma_files", CORPUS_CASES)
def test_adding_lemmas_never_breaks_a_proof(spec_name, prog_name, lemma_files):
    cs = spec(spec_name, *lemma_files)
    extra = tuple(cs.lemmas) + tuple(corpus_lemmas())
    for name in cs.names():
        base = prove(program(prog_name), cs, name)
        more = prove(program(prog_name), cs, name, lemmas=extra)
        if base.kind == VerdictKind.PROVED_TRUE:
            assert more.kind == VerdictKind.PROVED_TRUE


# --- counterexamples --------------------------------------------------------


def _return6():
    (m,) = [m for m in mutate(program("simple00"), MutationOperator.OFF_BY_ONE)]
    assert run_transaction(m.program, b"").output[-1] == 6
    return m.program


def test_counterexample_for_return_6():
    p = _return6()
    c = spec("simple00").claims[0]
    cex = find_counterexample(p, c)
    assert cex is not None
    assert replay(p, c, cex) is not None
    v = prove(p, spec("simple00"), "simple00")
    assert v.kind == VerdictKind.ERROR and v.counterexample is not None
    assert "postcondition violated" in v.detail


def test_no_counterexample_for_correct_program():
    assert find_counterexample(program("simple00"), spec("simple00").claims[0]) is None


def test_boundary_counterexample_for_require():
    base = spec("requires00").get("a0gt0")
    wrong = Claim("always", base.pre, terms("#rangeUInt(256, A0)"), {"statusCode": parse_term("EVMC_SUCCESS")})
    cex = find_counterexample(program("requires00"), wrong)
    assert cex is not None and cex.env["A0"] == 0
    assert cex.result.status == REVERT


# --- satisfiability ---------------------------------------------------------


def test_satisfiability_examples():
    assert is_satisfiable(terms("A0 >Int 0", "notBool (A0 >Int 0)")) == SolverAnswer.UNSAT
    assert is_satisfiable(terms("A0 >Int 0")) == SolverAnswer.SAT
    assert is_satisfiable(terms("keccak256(A) ==Int keccak256(B)", "A =/=Int B")) == SolverAnswer.UNSAT
    assert is_satisfiable(terms("true")) == SolverAnswer.SAT
    assert is_satisfiable(terms("A0 *Int A0 ==Int 2")) in (SolverAnswer.UNKNOWN, SolverAnswer.UNSAT)


def test_sat_answers_come_with_witnesses():
    from kyaml.symexec import find_witness

    cs = terms("A0 >Int 5", "A0 <Int 9", "A1 ==Int A0 +Int 2")
    assert is_satisfiable(cs) == SolverAnswer.SAT
    env = find_witness(cs)
    assert all(eval_concrete(t, env) for t in cs)
