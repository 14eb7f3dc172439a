"""Prover backends behind one blocking call: builtin engine, external command or scripted stub."""

from __future__ import annotations

import enum
import os
import shlex
import shutil
import signal
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .claims import ClaimSet, expand
from .frontend import load_spec
from .kterm import Lemma, load_lemmas
from .minivm.program import Program, load_program
from .symexec.engine import Budget
from .symexec.prover import DEFAULT_TIME_LIMIT, ProveOptions, VerdictKind, prove

ENV_BACKEND = "KYAML_BACKEND"
GRACE = 0.5


class BackendKind(str, enum.Enum):
    BUILTIN = "builtin"
    EXTERNAL = "exec"
    STUB = "stub"


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    pass


class ScriptMissingEntry(BackendError):
    def __init__(self, claim: str, program: str):
        super().__init__(f"stub script has no entry for claim {claim!r} on program {program!r}")
        self.claim = claim
        self.program = program


class StubScriptError(BackendError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.BUILTIN
    command: str | None = None
    script: Path | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    budget: Budget = field(default_factory=Budget)
    counterexample_attempts: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.kind == BackendKind.EXTERNAL:
            if not self.command or "{spec}" not in self.command or "{program}" not in self.command:
                raise ValueError("an external command template needs {spec} and {program} placeholders")
        if self.kind == BackendKind.STUB:
            if self.script is None:
                raise ValueError("the stub backend needs a script path")
            load_stub_script(self.script)  # fail early on a malformed script

    @classmethod
    def parse(cls, text: str | None, time_limit: float = DEFAULT_TIME_LIMIT, **kw) -> "BackendConfig":
        """`builtin`, `exec:<command template>` or `stub:<script path>`; None reads $KYAML_BACKEND."""
        text = text or os.environ.get(ENV_BACKEND) or "builtin"
        if text == "builtin":
            return cls(BackendKind.BUILTIN, time_limit=time_limit, **kw)
        if text.startswith("exec:"):
            return cls(BackendKind.EXTERNAL, command=text[5:], time_limit=time_limit, **kw)
        if text.startswith("stub:"):
            return cls(BackendKind.STUB, script=Path(text[5:]), time_limit=time_limit, **kw)
        raise ValueError(f"unknown backend {text!r}; expected builtin, exec:<cmd> or stub:<file>")

    def describe(self) -> str:
        if self.kind == BackendKind.EXTERNAL:
            return f"exec:{self.command}"
        if self.kind == BackendKind.STUB:
            return f"stub:{self.script.name}"
        return "builtin"


@dataclass(frozen=True)
class JobResult:
    kind: VerdictKind
    elapsed: float
    detail: str = ""

    @property
    def proved(self) -> bool:
        return self.kind == VerdictKind.PROVED_TRUE


# ---------------------------------------------------------------------------
# stub scripts

_VERDICTS = {
    "proved": VerdictKind.PROVED_TRUE,
    "proved_true": VerdictKind.PROVED_TRUE,
    "proved-true": VerdictKind.PROVED_TRUE,
    "error": VerdictKind.ERROR,
    "timeout": VerdictKind.TIMEOUT,
}


def parse_stub_script(text: str, source: str = "<stub>") -> dict[tuple[str, str], tuple[VerdictKind, float]]:
    """Lines `claim program verdict delay_seconds`; `#` starts a comment; `*` matches anything."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise StubScriptError(f"{source}:{lineno}: expected 'claim program verdict delay'")
        claim, program, verdict, delay = parts
        if verdict.lower() not in _VERDICTS:
            raise StubScriptError(f"{source}:{lineno}: unknown verdict {verdict!r}")
        try:
            seconds = float(delay)
        except ValueError:
            raise StubScriptError(f"{source}:{lineno}: bad delay {delay!r}") from None
        if seconds < 0:
            raise StubScriptError(f"{source}:{lineno}: negative delay")
        entries[(claim, program)] = (_VERDICTS[verdict.lower()], seconds)
    return entries


def load_stub_script(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BackendUnavailable(f"cannot read stub script {path}: {exc}") from None
    return parse_stub_script(text, str(path))


def _stub_lookup(entries, claim: str, program: str):
    for key in ((claim, program), (claim, "*"), ("*", program), ("*", "*")):
        if key in entries:
            return entries[key]
    raise ScriptMissingEntry(claim, program)


def _run_stub(cfg: BackendConfig, claim: str, program: str) -> JobResult:
    verdict, delay = _stub_lookup(load_stub_script(cfg.script), claim, program)
    start = time.monotonic()
    if delay >= cfg.time_limit:
        time.sleep(cfg.time_limit)
        return JobResult(VerdictKind.TIMEOUT, time.monotonic() - start,
                         f"scripted delay {delay:g}s exceeds the {cfg.time_limit:g}s limit")
    time.sleep(delay)
    return JobResult(verdict, time.monotonic() - start, f"scripted {verdict.value}")


# ---------------------------------------------------------------------------
# external command


def _kill_group(proc: subprocess.Popen):
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def _run_external(cfg: BackendConfig, claim: str, spec_path: Path, program_path: Path) -> JobResult:
    command = cfg.command.format(spec=shlex.quote(str(spec_path)), program=shlex.quote(str(program_path)),
                                 claim=shlex.quote(claim))
    try:
        head = shlex.split(command)[0]
    except (ValueError, IndexError):
        raise BackendUnavailable(f"cannot parse command {command!r}") from None
    if shutil.which(head) is None and not Path(head).exists():
        raise BackendUnavailable(f"external prover {head!r} not found")
    start = time.monotonic()
    proc = subprocess.Popen(command, shell=True, stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                            start_new_session=True, env=os.environ.copy())
    try:
        out, _ = proc.communicate(timeout=cfg.time_limit)
    except subprocess.TimeoutExpired:
        _kill_group(proc)
        out, _ = proc.communicate()
        return JobResult(VerdictKind.TIMEOUT, time.monotonic() - start,
                         f"killed after {cfg.time_limit:g}s\n" + out.decode(errors="replace"))
    elapsed = time.monotonic() - start
    text = out.decode(errors="replace")
    if proc.returncode == 0:
        return JobResult(VerdictKind.PROVED_TRUE, elapsed, text)
    return JobResult(VerdictKind.ERROR, elapsed, f"exit code {proc.returncode}\n{text}")


# ---------------------------------------------------------------------------
# builtin engine


def run_builtin(cfg: BackendConfig, program: Program, cs: ClaimSet, claim: str,
                lemmas: Sequence[Lemma] | None = None) -> JobResult:
    opts = ProveOptions(cfg.budget, cfg.time_limit, True, cfg.counterexample_attempts, cfg.seed)
    v = prove(program, cs, claim, lemmas, opts)
    return JobResult(v.kind, v.elapsed, v.detail)


def compile_spec(spec_path: str | Path, lemma_paths: Sequence[str | Path] = ()) -> ClaimSet:
    lemmas = tuple(lemma for p in lemma_paths for lemma in load_lemmas(p))
    return expand(load_spec(spec_path), lemmas)


def run_job(cfg: BackendConfig, claim: str, spec_path: str | Path, program_path: str | Path,
            lemma_paths: Sequence[str | Path] = ()) -> JobResult:
    """Run one (claim, program) job to a verdict; blocks for at most about the time limit."""
    spec_path, program_path = Path(spec_path), Path(program_path)
    for p in (spec_path, program_path):
        if not p.exists():
            raise FileNotFoundError(p)
    if cfg.kind == BackendKind.STUB:
        return _run_stub(cfg, claim, program_path.stem)
    if cfg.kind == BackendKind.EXTERNAL:
        return _run_external(cfg, claim, spec_path, program_path)
    return run_builtin(cfg, load_program(program_path), compile_spec(spec_path, lemma_paths), claim)
