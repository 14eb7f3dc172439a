import json

import pytest

from conftest import claim_inputs, program, spec
from kyaml.backends import JobResult
from kyaml.minivm import assemble
from kyaml.mutagen import (
    ALL_OPERATORS,
    KillResult,
    MutationOperator,
    MutationReport,
    NoApplicableSite,
    classify_kill,
    distinguishing_input,
    generate_mutants,
    mutate,
    write_mutants,
)
from kyaml.symexec import VerdictKind

THREE_PUSHES = "PUSH 1\nPUSH 0\nADD\nPUSH 7\nSSTORE\nSTOP"

P, E, T = VerdictKind.PROVED_TRUE, VerdictKind.ERROR, VerdictKind.TIMEOUT


def ops(p):
    return [i.op for i in p.instructions]


def test_dup_call_doubles_the_call():
    (m,) = mutate(program("call00"), MutationOperator.DUP_CALL)
    assert ops(program("call00")).count("CALL") == 1
    assert ops(m.program).count("CALL") == 2
    assert m.mutant_id == f"call00__dup_call_{m.site}"


def test_dup_call_needs_a_call():
    with pytest.raises(NoApplicableSite):
        mutate(program("simple00"), MutationOperator.DUP_CALL)


def test_const_replace_one_mutant_per_push():
    p = assemble(THREE_PUSHES, "three")
    ms = mutate(p, MutationOperator.CONST_REPLACE)
    assert len(ms) == 3
    assert [m.program.instructions[m.site].arg for m in ms] == [0, 1, 0]


def test_off_by_one_makes_return_6():
    (m,) = mutate(program("simple00"), MutationOperator.OFF_BY_ONE)
    assert m.program.instructions[0].arg == 6


def test_drop_require_removes_guard():
    (m,) = mutate(program("requires00"), MutationOperator.DROP_REQUIRE)
    assert "JUMPI" not in ops(m.program)
    assert "GT" not in ops(m.program)
    # the branch operands are popped so the stack stays balanced
    from kyaml.minivm import run_transaction
    from conftest import calldata

    r = run_transaction(m.program, calldata("execute(uint256)", 0))
    assert r.status == "EVMC_SUCCESS" and r.error is None


def test_negate_and_swap():
    p = program("staticloop00")
    neg = mutate(p, MutationOperator.NEGATE_BRANCH)
    assert len(neg) == sum(i.op == "JUMPI" for i in p.instructions)
    for m in neg:
        assert ops(m.program)[m.site] == "ISZERO"
    (swap, swap2) = mutate(p, MutationOperator.SWAP_CMP)
    assert ops(swap.program)[swap.site] == "GT"


def test_labels_follow_edits():
    p = program("staticloop00")
    for m in generate_mutants(p):
        for label, idx in p.labels.items():
            moved = m.program.labels[label]
            assert 0 <= moved <= len(m.program.instructions)


def test_generation_is_deterministic():
    a = generate_mutants(program("call00"), seed=5, limit=3)
    b = generate_mutants(program("call00"), seed=5, limit=3)
    assert [(m.mutant_id, m.program.to_text()) for m in a] == [(m.mutant_id, m.program.to_text()) for m in b]


def test_limit_samples_sites():
    full = generate_mutants(program("call00"), [MutationOperator.CONST_REPLACE])
    few = generate_mutants(program("call00"), [MutationOperator.CONST_REPLACE], seed=1, limit=2)
    assert len(few) == 2 and {m.mutant_id for m in few} <= {m.mutant_id for m in full}


def test_every_mutant_assembles_and_differs():
    for name in ("call00", "staticloop00", "ecrecoverloop00", "requires00", "storage02"):
        base = program(name)
        for m in generate_mutants(base):
            again = assemble(m.program.to_text(), m.mutant_id)
            assert ops(again) == ops(m.program)
            assert m.program.to_text() != base.to_text()


def test_skipped_operators_are_reported():
    report = MutationReport()
    generate_mutants(program("simple00"), ALL_OPERATORS, report=report)
    skipped = {s.operator for s in report.skipped}
    assert MutationOperator.DUP_CALL in skipped and MutationOperator.DROP_REQUIRE in skipped
    assert {m.operator for m in report.mutants} == {MutationOperator.CONST_REPLACE, MutationOperator.OFF_BY_ONE}


def test_manifest(tmp_path):
    report = MutationReport()
    generate_mutants(program("requires00"), ALL_OPERATORS, report=report)
    path = write_mutants(report.mutants, tmp_path, report.skipped)
    manifest = json.loads(path.read_text())
    assert len(manifest["mutants"]) == len(report.mutants)
    for entry in manifest["mutants"]:
        assert (tmp_path / entry["file"]).exists()
        assert entry["file"] == f"{entry['mutant']}.mvm"
        assert entry["file"].startswith("requires00__")
    assert {s["operator"] for s in manifest["skipped"]} == {"DUP_CALL"}


def test_classify_kill():
    assert classify_kill([P, P, E]) == KillResult.PASS
    assert classify_kill([P] * 7) == KillResult.FAIL
    assert classify_kill([P] + [T] * 6) == KillResult.PASS
    assert classify_kill([JobResult(P, 1.0), JobResult(T, 2.0)]) == KillResult.PASS


def test_operator_parsing():
    assert MutationOperator.parse("dup-call") == MutationOperator.DUP_CALL
    with pytest.raises(ValueError):
        MutationOperator.parse("nope")
    assert all(op.description for op in MutationOperator)


ACCEPTANCE_OPS = [MutationOperator.DUP_CALL, MutationOperator.CONST_REPLACE, MutationOperator.DROP_REQUIRE]


def test_call_mutants_are_not_equivalent():
    base = program("call00")
    inputs = claim_inputs(base, spec("call00"))
    mutants = generate_mutants(base, ACCEPTANCE_OPS)
    assert len(mutants) >= 6
    for m in mutants:
        assert distinguishing_input(base, m.program, inputs) is not None, m.mutant_id
