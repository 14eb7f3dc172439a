"""Acceptance criteria 1-11, one test each, each recording a PASS/FAIL line."""

import contextlib
import time

import pytest
from click.testing import CliRunner

from conftest import ACCEPTANCE, CORPUS_CASES, claim_inputs, concrete_soundness, program, spec
from kyaml import CORPUS
from kyaml.backends import BackendConfig
from kyaml.claims import admitted_pairs, claims_equal, emit_k_module
from kyaml.cli import main
from kyaml.harness import RunConfig, load_csv, render_report, run_matrix
from kyaml.kterm import Tuple
from kyaml.mutagen import KillResult, MutationOperator, classify_kill, distinguishing_input, generate_mutants, mutate
from kyaml.symexec import ProveOptions, VerdictKind, explore, find_counterexample, init_state, prove, replay

P, E, T = VerdictKind.PROVED_TRUE, VerdictKind.ERROR, VerdictKind.TIMEOUT


@contextlib.contextmanager
def criterion(n: int, title: str):
    try:
        yield
    except BaseException:
        ACCEPTANCE[n] = ("FAIL", title)
        print(f"criterion {n} FAIL: {title}")
        raise
    ACCEPTANCE[n] = ("PASS", title)
    print(f"criterion {n} PASS: {title}")


def proves(prog, cs, name, **kw) -> VerdictKind:
    return prove(program(prog) if isinstance(prog, str) else prog, cs, name, **kw).kind


def test_01_walkthrough_corpus_proves():
    walkthrough = ["simple00", "simple02", "staticarray00", "requires00", "staticloop00", "ecrecover00", "storage00"]
    with criterion(1, "walkthrough corpus proves with the builtin backend in under 60 s"):
        start = time.monotonic()
        failures = [(name, c) for name in walkthrough for c in spec(name).names()
                    if proves(name, spec(name), c) != P]
        assert failures == []
        assert time.monotonic() - start < 60


def test_02_rsstore_lemma_necessity():
    with criterion(2, "refund claim needs the Rsstore lemma"):
        v = prove(program("storage01"), spec("storage01"), "storage01", options=ProveOptions(time_limit=30))
        assert v.kind == E and "Rsstore(" in v.detail
        assert proves("storage01", spec("storage01", "rsstore.lemmas"), "storage01") == P


def test_03_chop_lemma_necessity():
    with criterion(3, "overflow claim needs the chop lemma"):
        assert "rule chop(I) => 0 requires I ==Int pow256" in (CORPUS / "chop.lemmas").read_text()
        v = prove(program("storage02"), spec("storage02"), "overflow", options=ProveOptions(time_limit=30))
        assert v.kind == E and "chop" in v.detail
        assert proves("storage02", spec("storage02", "chop.lemmas"), "overflow") == P


def test_04_inheritance_equivalence():
    with criterion(4, "verbose and inheriting forms expand to equal claims"):
        verbose, short = spec("requires00-verbose"), spec("requires00")
        assert claims_equal(verbose, short)
        a = emit_k_module(verbose, "requires00_verbose").splitlines()
        b = emit_k_module(short, "requires00").splitlines()
        assert a[1:] == b[1:] and a[0] != b[0]


def test_05_superfluous_conjunct():
    with criterion(5, "strengthened signature claims admit the same pairs and still prove"):
        doms = {"H": [1], "R0": [2], "R1": [3], "S0": [4], "S1": [5], "V0": range(256), "V1": range(256)}
        original = admitted_pairs(spec("ecrecoverloop00"), doms)
        strengthened = admitted_pairs(spec("ecrecoverloop00-strengthened"), doms)
        assert len(original) == 256 * 256
        assert original == strengthened
        cs = spec("ecrecoverloop00-strengthened")
        assert all(proves("ecrecoverloop00", cs, c) == P for c in cs.names())


def test_06_soundness_suite():
    with criterion(6, "500 concrete transactions per proved claim, 0 violations"):
        for spec_name, prog_name, lemma_files in CORPUS_CASES:
            cs = spec(spec_name, *lemma_files)
            for c in cs:
                assert proves(prog_name, cs, c.name) == P, (spec_name, c.name)
                checked, violations = concrete_soundness(program(prog_name), c, 500)
                assert checked == 500 and violations == [], (spec_name, c.name)


def test_07_mutation_kill():
    with criterion(7, "call-analog mutants are all killed"):
        base, cs = program("call00"), spec("call00")
        assert all(proves(base, cs, c) == P for c in cs.names())
        ops = [MutationOperator.DUP_CALL, MutationOperator.CONST_REPLACE, MutationOperator.DROP_REQUIRE]
        mutants = generate_mutants(base, ops)
        assert len(mutants) >= 6 and {m.operator for m in mutants} == set(ops)
        inputs = claim_inputs(base, cs)
        verdicts = {}
        for m in mutants:
            kinds = [proves(m.program, cs, c) for c in cs.names()]
            verdicts[m.mutant_id] = dict(zip(cs.names(), kinds))
            if distinguishing_input(base, m.program, inputs) is not None:
                assert classify_kill(kinds) == KillResult.PASS, m.mutant_id
        (dup,) = [m for m in mutants if m.operator == MutationOperator.DUP_CALL]
        for rule in ("invoked-at-most-once", "call-failure", "call-success"):
            assert verdicts[dup.mutant_id][rule] != P
        (hashed,) = [m for m in mutants if m.operator == MutationOperator.CONST_REPLACE
                     and base.instructions[m.site].arg > 2**200]
        assert sum(k != P for k in verdicts[hashed.mutant_id].values()) >= 4


def test_08_timeout_handling():
    with criterion(8, "scripted 10 s delays time out under a 2 s limit"):
        backend = BackendConfig.parse(f"stub:{CORPUS / 'eip712.stub'}", 2.0)
        cfg = RunConfig(specs=(CORPUS / "call00.yaml",), programs=(CORPUS / "call00.mvm",),
                        backend=backend, time_limit=2.0, parallelism=7)
        m = run_matrix(cfg)
        row = m.column("call00")
        assert all(r.elapsed < 3.0 for r in row)
        assert [r.kind for r in row].count(P) == 1 and [r.kind for r in row].count(T) == 6
        md = render_report(m, "md")
        assert md.count("| proved true |") == 1 and md.count("| timeout |") == 6


def test_09_counterexamples_replay():
    with criterion(9, "every emitted counterexample replays as a violation"):
        (m,) = mutate(program("simple00"), MutationOperator.OFF_BY_ONE)
        claim = spec("simple00").claims[0]
        cex = find_counterexample(m.program, claim)
        assert cex is not None and replay(m.program, claim, cex) is not None
        emitted = replayed = 0
        opts = ProveOptions(time_limit=2)
        for spec_name, prog_name, lemma_files in CORPUS_CASES:
            cs = spec(spec_name, *lemma_files)
            for mut in generate_mutants(program(prog_name), seed=0, limit=2):
                for c in cs:
                    v = prove(mut.program, cs, c.name, options=opts)
                    if v.counterexample is not None:
                        emitted += 1
                        replayed += replay(mut.program, c, v.counterexample) is not None
        assert emitted > 0 and replayed == emitted


def test_10_call_log_properties():
    with criterion(10, "call-log claims prove on the original and catch the duplicated call"):
        cs = spec("call00")
        assert proves("call00", cs, "invoked-at-most-once") == P
        (dup,) = mutate(program("call00"), MutationOperator.DUP_CALL)
        assert proves(dup.program, cs, "invoked-at-most-once") == E
        claim = cs.get("not-invoked-if-false")
        assert claim.post["callLog"] == Tuple(())
        assert proves("call00", cs, "not-invoked-if-false") == P
        finals = explore(program("call00"), init_state(program("call00"), claim))
        assert finals and all(len(f.call_log) == 0 for f in finals)


def test_11_deterministic_matrix(tmp_path, monkeypatch):
    with criterion(11, "two identical matrix runs give byte-identical CSV"):
        mutants = tmp_path / "mutants"
        runner = CliRunner()
        r = runner.invoke(main, ["mutate", str(CORPUS / "call00.mvm"), "--ops", "dup_call,drop_require",
                                 "-o", str(mutants)])
        assert r.exit_code == 0, r.output
        reports = []
        for i in range(2):
            out = tmp_path / f"run{i}.csv"
            r = runner.invoke(main, ["matrix", "--specs", str(CORPUS / "call00.yaml"), "--programs",
                                     f"{CORPUS / 'call00.mvm'},{mutants}", "--seed", "7", "-j", "4",
                                     "--report", "csv", "-o", str(out)])
            assert r.exit_code == 0, r.output
            reports.append(render_report(load_csv(out.read_text()), "csv", timings=False).encode())
        assert reports[0] == reports[1]
        assert reports[0].count(b"\ncell,") == 7 * 5  # the original plus one DUP_CALL and three DROP_REQUIRE mutants
