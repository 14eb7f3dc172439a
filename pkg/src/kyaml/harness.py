"""Claim x program matrix runs and rendered result tables."""

from __future__ import annotations

import concurrent.futures as cf
import csv
import enum
import html
import io
import logging
import re
import threading
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .backends import BackendConfig, BackendKind, JobResult, compile_spec, run_builtin, run_job
from .claims import ClaimSet
from .frontend import SpecError
from .kterm import TermError
from .minivm.program import AssemblyError, Program, load_program
from .mutagen import KillResult, classify_kill
from .symexec.prover import DEFAULT_TIME_LIMIT, VerdictKind

log = logging.getLogger(__name__)

PROVED_COLOR = "D4EDDA"
FAILED_COLOR = "F8D7DA"
TIMEOUT_GRACE = 1.0
MUTANT_NAME = re.compile(r"^.+__[a-z_]+_\d+$")


class ReportFormat(str, enum.Enum):
    HTML = "html"
    CSV = "csv"
    MD = "md"


class CompileFailure(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    specs: tuple[Path, ...]
    programs: tuple[Path, ...]
    lemmas: tuple[Path, ...] = ()
    backend: BackendConfig = field(default_factory=BackendConfig)
    time_limit: float = DEFAULT_TIME_LIMIT
    parallelism: int = 1
    seed: int = 0
    report: ReportFormat = ReportFormat.HTML

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")


@dataclass
class ResultMatrix:
    claims: list[str]
    programs: list[str]
    cells: dict[tuple[str, str], JobResult]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        missing = [(c, p) for c in self.claims for p in self.programs if (c, p) not in self.cells]
        if missing:
            raise ValueError(f"matrix is missing cells {missing[:3]}")

    def get(self, claim: str, program: str) -> JobResult:
        return self.cells[(claim, program)]

    def column(self, program: str) -> list[JobResult]:
        return [self.cells[(c, program)] for c in self.claims]

    def kill(self, program: str) -> KillResult:
        return classify_kill(self.column(program))

    def all_proved(self, program: str) -> bool:
        return all(r.proved for r in self.column(program))

    def ok(self) -> bool:
        """Originals prove every claim and every mutant is killed."""
        return all(self.kill(p) == KillResult.PASS if is_mutant(p) else self.all_proved(p)
                   for p in self.programs)

    def verdict_table(self) -> list[tuple[str, str, str]]:
        return [(c, p, self.cells[(c, p)].kind.value) for p in self.programs for c in self.claims]


def is_mutant(program_name: str) -> bool:
    return bool(MUTANT_NAME.match(program_name))


# ---------------------------------------------------------------------------
# running


def _expand_programs(paths: Sequence[Path]) -> list[Path]:
    out = []
    for p in paths:
        p = Path(p)
        out += sorted(p.glob("*.mvm")) if p.is_dir() else [p]
    return out


def _compile(cfg: RunConfig) -> tuple[list[tuple[Path, ClaimSet]], list[tuple[Path, Program]]]:
    specs = []
    names: set[str] = set()
    for path in cfg.specs:
        try:
            cs = compile_spec(path, cfg.lemmas)
        except (SpecError, TermError, OSError, ValueError) as exc:
            raise CompileFailure(f"{path}: {exc}") from exc
        dup = names & set(cs.names())
        if dup:
            raise CompileFailure(f"{path}: claim names {sorted(dup)} already defined by another spec")
        names |= set(cs.names())
        specs.append((Path(path), cs))
    programs = []
    seen: set[str] = set()
    for path in _expand_programs(cfg.programs):
        try:
            prog = load_program(path)
        except (AssemblyError, OSError) as exc:
            raise CompileFailure(f"{path}: {exc}") from exc
        if prog.name in seen:
            raise CompileFailure(f"two programs are named {prog.name!r}")
        seen.add(prog.name)
        programs.append((path, prog))
    return specs, programs


def _job(cfg: RunConfig, backend: BackendConfig, spec_path: Path, cs: ClaimSet, claim: str,
         program_path: Path, program: Program) -> JobResult:
    start = time.monotonic()
    try:
        if backend.kind == BackendKind.BUILTIN:
            return run_builtin(backend, program, cs, claim)
        return run_job(backend, claim, spec_path, program_path, cfg.lemmas)
    except Exception as exc:  # crash containment: one failed job never stops the matrix
        tb = traceback.format_exception_only(type(exc), exc)
        return JobResult(VerdictKind.ERROR, time.monotonic() - start, "job crashed: " + "".join(tb).strip())


def run_matrix(cfg: RunConfig) -> ResultMatrix:
    specs, programs = _compile(cfg)
    backend = cfg.backend
    if backend.time_limit != cfg.time_limit or backend.seed != cfg.seed:
        backend = BackendConfig(backend.kind, backend.command, backend.script, cfg.time_limit, backend.budget,
                                backend.counterexample_attempts, cfg.seed)
    claims = [c for _, cs in specs for c in cs.names()]
    metadata = {
        "backend": backend.describe(),
        "time_limit_s": f"{cfg.time_limit:g}",
        "seed": str(cfg.seed),
        "version": __version__,
    }
    if not programs:
        log.warning("no programs given; the matrix is empty")
    jobs = [(claim, prog.name, spec_path, cs, ppath, prog)
            for ppath, prog in programs for spec_path, cs in specs for claim in cs.names()]
    cells: dict[tuple[str, str], JobResult] = {}
    if not jobs:
        return ResultMatrix(claims, [p.name for _, p in programs], cells, metadata)

    started: dict[tuple[str, str], float] = {}
    lock = threading.Lock()

    def task(claim, pname, spec_path, cs, ppath, prog):
        with lock:
            started[(claim, pname)] = time.monotonic()
        return _job(cfg, backend, spec_path, cs, claim, ppath, prog)

    pool = cf.ThreadPoolExecutor(max_workers=cfg.parallelism, thread_name_prefix="kyaml-job")
    futures = {pool.submit(task, *job): (job[0], job[1]) for job in jobs}
    pending = set(futures)
    try:
        while pending:
            done, pending = cf.wait(pending, timeout=0.05, return_when=cf.FIRST_COMPLETED)
            for fut in done:
                cells[futures[fut]] = fut.result()
            now = time.monotonic()
            for fut in list(pending):
                key = futures[fut]
                with lock:
                    t0 = started.get(key)
                if t0 is not None and now - t0 > cfg.time_limit + TIMEOUT_GRACE:
                    # the worker cannot be interrupted; record the timeout and stop waiting for it
                    cells[key] = JobResult(VerdictKind.TIMEOUT, now - t0, "harness deadline exceeded")
                    pending.discard(fut)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)
    return ResultMatrix(claims, [p.name for _, p in programs], cells, metadata)


# ---------------------------------------------------------------------------
# reports


def _minutes(seconds: float) -> str:
    return f"{seconds / 60:.1f}"


def _program_summary(m: ResultMatrix, program: str) -> str:
    if is_mutant(program):
        k = m.kill(program)
        return f"mutant test {k.value}" + (" (killed)" if k == KillResult.PASS else " (survived)")
    return "all claims proved" if m.all_proved(program) else "not all claims proved"


def _html(m: ResultMatrix) -> str:
    out = ["<!DOCTYPE html>", "<html>", "<head><meta charset=\"utf-8\"><title>Prover results</title>",
           "<style>table{border-collapse:collapse}td,th{border:1px solid #888;padding:2px 8px}</style>",
           "</head>", "<body>", "<h1>Prover results</h1>", "<ul>"]
    out += [f"<li>{html.escape(k)}: {html.escape(v)}</li>" for k, v in m.metadata.items()]
    out.append("</ul>")
    for p in m.programs:
        out.append(f"<h2>{html.escape(p)}</h2>")
        out.append(f"<p>{html.escape(_program_summary(m, p))}</p>")
        out.append("<table>")
        out.append("<tr><th>Rule</th><th>Time (min)</th><th>Result</th></tr>")
        for c in m.claims:
            r = m.get(c, p)
            color = PROVED_COLOR if r.proved else FAILED_COLOR
            out.append(f"<tr><td>{html.escape(c)}</td><td>{_minutes(r.elapsed)}</td>"
                       f"<td style=\"background-color:#{color}\">{html.escape(r.kind.value)}</td></tr>")
        out.append("</table>")
    out += ["</body>", "</html>"]
    return "\n".join(out) + "\n"


def _md(m: ResultMatrix) -> str:
    out = ["# Prover results", ""]
    out += [f"- {k}: {v}" for k, v in m.metadata.items()]
    for p in m.programs:
        out += ["", f"## {p}", "", _program_summary(m, p), "", "| Rule | Time (min) | Result |", "|---|---|---|"]
        for c in m.claims:
            r = m.get(c, p)
            out.append(f"| {c} | {_minutes(r.elapsed)} | {r.kind.value} |")
    return "\n".join(out) + "\n"


CSV_HEADER = ("record", "claim", "program", "verdict", "elapsed_s", "detail")


def _csv(m: ResultMatrix, timings: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER if timings else CSV_HEADER[:4] + CSV_HEADER[5:])
    for k, v in m.metadata.items():
        w.writerow(("meta", k, v, "", "", "") if timings else ("meta", k, v, "", ""))
    for c in m.claims:
        w.writerow(("claim", c, "", "", "", "") if timings else ("claim", c, "", "", ""))
    for p in m.programs:
        w.writerow(("program", "", p, "", "", "") if timings else ("program", "", p, "", ""))
    for p in m.programs:
        for c in m.claims:
            r = m.get(c, p)
            row = ["cell", c, p, r.kind.value, repr(r.elapsed), r.detail]
            if not timings:
                del row[4]
            w.writerow(row)
    return buf.getvalue()


def render_report(m: ResultMatrix, fmt: ReportFormat | str, timings: bool = True) -> str:
    fmt = ReportFormat(fmt.lower() if isinstance(fmt, str) else fmt)
    if fmt == ReportFormat.HTML:
        return _html(m)
    if fmt == ReportFormat.MD:
        return _md(m)
    return _csv(m, timings)


def load_csv(text: str) -> ResultMatrix:
    """Inverse of the CSV report (with timings)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a result matrix CSV")
    claims, programs, cells, metadata = [], [], {}, {}
    for row in rows[1:]:
        kind = row[0]
        if kind == "meta":
            metadata[row[1]] = row[2]
        elif kind == "claim":
            claims.append(row[1])
        elif kind == "program":
            programs.append(row[2])
        elif kind == "cell":
            cells[(row[1], row[2])] = JobResult(VerdictKind(row[3]), float(row[4]), row[5])
        else:
            raise ValueError(f"unknown record {kind!r}")
    return ResultMatrix(claims, programs, cells, metadata)
