"""Command line: compile, prove, mutate, matrix and run.

Exit codes: 0 on success, 1 when a proof fails or times out, 2 on usage
or compile errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .backends import BackendConfig, BackendError, JobResult, compile_spec, run_job
from .claims import UnboundPostVariable, canonical_json, emit_k_module
from .frontend import SpecError
from .harness import CompileFailure, ReportFormat, RunConfig, render_report, run_matrix
from .kterm import LemmaError, TermError
from .minivm.machine import run_transaction
from .minivm.program import AssemblyError, load_program
from .mutagen import MutationOperator, MutationReport, generate_mutants, write_mutants
from .symexec.prover import DEFAULT_TIME_LIMIT

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_COMPILE_ERRORS = (SpecError, TermError, LemmaError, UnboundPostVariable, AssemblyError, OSError, ValueError)


def _split(values) -> list[str]:
    return [v for item in values for v in item.split(",") if v]


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="kyaml")
def main():
    """K-YAML specification toolchain."""


@main.command("compile")
@click.argument("spec", type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write here instead of stdout.")
@click.option("--lemmas", "lemma_files", multiple=True, help="Lemma file(s) to embed as rules.")
@click.option("--module", "module_name", default=None, help="Module name (default: spec file stem).")
@click.option("--json", "as_json", is_flag=True, help="Emit the canonical JSON rendering instead.")
def compile_cmd(spec, output, lemma_files, module_name, as_json):
    """Compile a K-YAML spec into a K-style claim module."""
    try:
        cs = compile_spec(spec, _split(lemma_files))
    except _COMPILE_ERRORS as exc:
        _fail_usage(str(exc))
    text = canonical_json(cs) if as_json else emit_k_module(cs, module_name or Path(spec).stem.replace("-", "_"))
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {len(cs)} claim(s) to {output}")
    else:
        click.echo(text, nl=False)


@main.command("prove")
@click.option("--spec", required=True, type=click.Path(dir_okay=False))
@click.option("--program", required=True, type=click.Path(dir_okay=False))
@click.option("--claim", "claims", multiple=True, help="Claim(s) to prove (default: all).")
@click.option("--lemmas", "lemma_files", multiple=True)
@click.option("--backend", default=None, help="builtin | exec:<cmd> | stub:<file> (default $KYAML_BACKEND or builtin).")
@click.option("--timeout", type=float, default=DEFAULT_TIME_LIMIT, show_default=True, help="Seconds per claim.")
def prove_cmd(spec, program, claims, lemma_files, backend, timeout):
    """Prove claims of SPEC against PROGRAM."""
    lemma_files = _split(lemma_files)
    try:
        cfg = BackendConfig.parse(backend, timeout)
        cs = compile_spec(spec, lemma_files)
        load_program(program)
    except (*_COMPILE_ERRORS, BackendError) as exc:
        _fail_usage(str(exc))
    names = _split(claims) or cs.names()
    unknown = [n for n in names if n not in cs.names()]
    if unknown:
        _fail_usage(f"unknown claim(s) {unknown}; the spec file defines {cs.names()}")
    failed = False
    for name in names:
        try:
            r = run_job(cfg, name, spec, program, lemma_files)
        except BackendError as exc:
            _fail_usage(str(exc))
        _print_result(name, r)
        failed |= not r.proved
    sys.exit(EXIT_FAIL if failed else EXIT_OK)


def _print_result(name: str, r: JobResult):
    click.echo(f"{name}: {r.kind.value} ({r.elapsed:.2f} s)")
    if not r.proved and r.detail:
        for line in r.detail.strip().splitlines():
            click.echo(f"    {line}")


@main.command("mutate")
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--ops", default=",".join(op.value for op in MutationOperator), show_default=True,
              help="Comma-separated operators.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--limit", type=int, default=None, help="At most this many sites per operator.")
@click.option("-o", "--output", "outdir", required=True, type=click.Path(file_okay=False))
def mutate_cmd(program, ops, seed, limit, outdir):
    """Write mutants of PROGRAM into a directory with a manifest."""
    try:
        prog = load_program(program)
        operators = [MutationOperator.parse(o) for o in _split([ops])]
    except (AssemblyError, OSError, ValueError) as exc:
        _fail_usage(str(exc))
    report = MutationReport()
    generate_mutants(prog, operators, seed, limit, report)
    manifest = write_mutants(report.mutants, outdir, report.skipped)
    for s in report.skipped:
        click.echo(f"note: {s}", err=True)
    click.echo(f"wrote {len(report.mutants)} mutant(s); manifest {manifest}")


@main.command("matrix")
@click.option("--specs", multiple=True, required=True, help="Spec file(s); repeat or comma-separate.")
@click.option("--programs", multiple=True, required=True, help="Program files or directories of .mvm files.")
@click.option("--lemmas", "lemma_files", multiple=True)
@click.option("--backend", default=None)
@click.option("--timeout", type=float, default=DEFAULT_TIME_LIMIT, show_default=True)
@click.option("-j", "--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Parallel jobs.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "fmt", type=click.Choice([f.value for f in ReportFormat], case_sensitive=False),
              default="html", show_default=True)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def matrix_cmd(specs, programs, lemma_files, backend, timeout, jobs, seed, fmt, output):
    """Run every claim against every program and write a report."""
    try:
        cfg = RunConfig(
            specs=tuple(Path(s) for s in _split(specs)),
            programs=tuple(Path(p) for p in _split(programs)),
            lemmas=tuple(Path(p) for p in _split(lemma_files)),
            backend=BackendConfig.parse(backend, timeout, seed=seed),
            time_limit=timeout,
            parallelism=jobs,
            seed=seed,
            report=ReportFormat(fmt.lower()),
        )
        m = run_matrix(cfg)
    except (CompileFailure, BackendError, ValueError) as exc:
        _fail_usage(str(exc))
    Path(output).write_text(render_report(m, cfg.report))
    for p in m.programs:
        verdicts = " ".join(m.get(c, p).kind.value.replace(" ", "-") for c in m.claims)
        click.echo(f"{p}: {verdicts}")
    click.echo(f"report written to {output}")
    sys.exit(EXIT_OK if m.ok() else EXIT_FAIL)


@main.command("run")
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--calldata", default="", help="Hex calldata, with or without 0x.")
@click.option("--storage", default="{}", help='Initial storage as JSON, e.g. \'{"0": 5}\'.')
@click.option("--call-results", default="", help="Comma-separated scripted CALL return codes.")
@click.option("--step-limit", type=int, default=100_000, show_default=True)
def run_cmd(program, calldata, storage, call_results, step_limit):
    """Execute PROGRAM concretely on one transaction."""
    try:
        prog = load_program(program)
        data = bytes.fromhex(calldata[2:] if calldata.startswith("0x") else calldata)
        store = {int(k, 0): int(v) if isinstance(v, int) else int(v, 0) for k, v in json.loads(storage).items()}
        results = tuple(int(x, 0) for x in call_results.split(",") if x.strip())
    except (AssemblyError, OSError, ValueError) as exc:
        _fail_usage(str(exc))
    r = run_transaction(prog, data, store, step_limit, results)
    click.echo(f"status: {r.status}")
    click.echo(f"output: 0x{r.output.hex()}")
    if len(r.output) == 32:
        click.echo(f"output word: {int.from_bytes(r.output, 'big')}")
    click.echo(f"storage: {json.dumps({str(k): v for k, v in sorted(r.storage.items())})}")
    click.echo(f"refund: {r.refund}")
    click.echo(f"calls: {len(r.call_log)}  reads: {len(r.read_log)}  writes: {len(r.write_log)}")
    click.echo(f"steps: {r.steps}")
    if r.error:
        click.echo(f"fault: {r.error}")
    sys.exit(EXIT_FAIL if r.error else EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    main()
