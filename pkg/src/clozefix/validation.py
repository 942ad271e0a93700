"""Patch application and test-suite validation in isolated working copies."""
from __future__ import annotations

import hashlib
import os
import queue
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .corpus import SourceFile

COMPILE_ERROR, TEST_FAIL, PLAUSIBLE = "compile_error", "test_fail", "plausible"
CLASSIFICATIONS = (COMPILE_ERROR, TEST_FAIL, PLAUSIBLE)
DEFAULT_TIMEOUT = 300.0
DEFAULT_TIME_LIMIT = 5 * 3600.0
DEFAULT_ENV_ALLOW = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR")
EXCERPT_CHARS = 2000
_NOT_EXECUTABLE = (126, 127)


class ConfigurationError(Exception):
    pass


class StaleWorkdir(Exception):
    pass


@dataclass(frozen=True)
class BugSpec:
    project_root: Path
    file: str
    buggy_line_no: int
    test_command: str
    compile_command: str | None = None
    timeout_seconds: float = DEFAULT_TIMEOUT
    time_limit: float = DEFAULT_TIME_LIMIT
    bug_id: str = ""
    include: tuple[str, ...] = ("**/*.java",)
    exclude: tuple[str, ...] = ("**/test/**",)
    env_allow: tuple[str, ...] = DEFAULT_ENV_ALLOW
    expected_fix: str | None = None  # developer line(s), tests only
    frequent_cutoff: int | None = None
    incremental: bool = False
    plant_line: str | None = None  # buggy text written over the line at checkout
    source_root: Path | None = None

    def __post_init__(self):
        if self.buggy_line_no < 1:
            raise ConfigurationError("buggy_line_no must be >= 1")
        if self.timeout_seconds <= 0 or self.time_limit <= 0:
            raise ConfigurationError("timeouts must be positive")

    def source(self) -> SourceFile:
        path = Path(self.project_root) / self.file
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read buggy file {path}: {exc}") from exc
        src = SourceFile.from_text(self.file, text)
        if self.buggy_line_no > len(src.lines):
            raise ConfigurationError(f"{self.file} has {len(src.lines)} lines; buggy_line_no={self.buggy_line_no}")
        return src

    def to_dict(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "project_root": str(self.source_root or self.project_root),
            "file": self.file,
            "buggy_line_no": self.buggy_line_no,
            "compile_command": self.compile_command,
            "test_command": self.test_command,
            "timeout_seconds": self.timeout_seconds,
            "time_limit": self.time_limit,
            "include": list(self.include),
            "exclude": list(self.exclude),
            "incremental": self.incremental,
        }


def checkout(spec: BugSpec, dest: str | Path) -> BugSpec:
    """Copy the project to ``dest`` and plant the buggy line there."""
    dest = Path(dest)
    shutil.copytree(spec.project_root, dest, ignore=shutil.ignore_patterns("build"))
    if spec.plant_line is None:
        return replace(spec, project_root=dest, source_root=Path(spec.project_root))
    fixed = spec.source()
    target = dest / spec.file
    target.write_bytes(patched_text(fixed, spec.buggy_line_no, [spec.plant_line]).encode("utf-8"))
    expected = spec.expected_fix if spec.expected_fix is not None else fixed.line(spec.buggy_line_no)
    return replace(spec, project_root=dest, source_root=Path(spec.project_root), plant_line=None, expected_fix=expected)


@dataclass(frozen=True)
class ValidationOutcome:
    classification: str
    exit_code: int
    duration: float
    log_excerpt: str
    timed_out: bool = False


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode() + b"\0")
            h.update(p.read_bytes())
    return h.hexdigest()


def patched_text(source: SourceFile, line_no: int, new_lines: Sequence[str]) -> str:
    lines = list(source.lines)
    lines[line_no - 1 : line_no] = list(new_lines)
    return source.render(lines)


@dataclass
class Workdir:
    path: Path
    manifest: frozenset[str] = field(default_factory=frozenset)

    @classmethod
    def create(cls, project_root: Path, dest: Path) -> "Workdir":
        shutil.copytree(project_root, dest)
        manifest = frozenset(p.relative_to(dest).as_posix() for p in dest.rglob("*"))
        return cls(dest, manifest)

    def scrub(self) -> None:
        """Remove anything the previous validation created."""
        for p in sorted(self.path.rglob("*"), key=lambda q: -len(q.parts)):
            if p.relative_to(self.path).as_posix() not in self.manifest:
                if p.is_dir() and not p.is_symlink():
                    shutil.rmtree(p, ignore_errors=True)
                else:
                    p.unlink(missing_ok=True)


def apply_patch(workdir: Workdir | Path, spec: BugSpec, new_lines: Sequence[str], original: SourceFile) -> str:
    """Write the patched file; returns the original text for ``revert``."""
    root = workdir.path if isinstance(workdir, Workdir) else Path(workdir)
    target = root / spec.file
    text = target.read_bytes().decode("utf-8")
    if SourceFile.from_text(spec.file, text).digest != original.digest:
        raise StaleWorkdir(f"{target} does not match the ingested source; refusing to patch")
    target.write_bytes(patched_text(original, spec.buggy_line_no, new_lines).encode("utf-8"))
    return text


def revert(workdir: Workdir | Path, spec: BugSpec, original_text: str) -> None:
    root = workdir.path if isinstance(workdir, Workdir) else Path(workdir)
    (root / spec.file).write_bytes(original_text.encode("utf-8"))


def _env(allow: Sequence[str]) -> dict[str, str]:
    return {k: os.environ[k] for k in allow if k in os.environ}


def _run(command: str, cwd: Path, timeout: float, env: dict) -> tuple[int, str, bool]:
    proc = subprocess.Popen(
        command,
        shell=True,
        cwd=cwd,
        env=env,
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        start_new_session=True,
    )
    try:
        out, _ = proc.communicate(timeout=timeout)
        code, timed_out = proc.returncode, False
    except subprocess.TimeoutExpired:
        os.killpg(proc.pid, signal.SIGKILL)
        out, _ = proc.communicate()
        code, timed_out = -signal.SIGKILL, True
    # keep excerpts independent of where the workdir lives
    return code, out.decode("utf-8", "replace").replace(str(cwd), "<workdir>"), timed_out


def _check_executable(code: int, command: str, log: str) -> None:
    if code in _NOT_EXECUTABLE:
        raise ConfigurationError(f"command not executable ({code}): {command!r}: {log.strip()[-200:]}")


def validate(workdir: Workdir | Path, spec: BugSpec, timeout: float | None = None) -> ValidationOutcome:
    """Run the (optional) compile command, then the test command, in ``workdir``."""
    root = workdir.path if isinstance(workdir, Workdir) else Path(workdir)
    timeout = spec.timeout_seconds if timeout is None else timeout
    env = _env(spec.env_allow)
    start = time.perf_counter()
    log = ""
    if spec.compile_command:
        code, log, timed_out = _run(spec.compile_command, root, timeout, env)
        _check_executable(code, spec.compile_command, log)
        if timed_out:
            return ValidationOutcome(TEST_FAIL, code, time.perf_counter() - start, log[-EXCERPT_CHARS:], True)
        if code != 0:
            return ValidationOutcome(COMPILE_ERROR, code, time.perf_counter() - start, log[-EXCERPT_CHARS:])
    remaining = max(0.001, timeout - (time.perf_counter() - start))
    code, out, timed_out = _run(spec.test_command, root, remaining, env)
    _check_executable(code, spec.test_command, out)
    log = (log + out)[-EXCERPT_CHARS:]
    duration = time.perf_counter() - start
    if timed_out:
        return ValidationOutcome(TEST_FAIL, code, duration, log, True)
    return ValidationOutcome(PLAUSIBLE if code == 0 else TEST_FAIL, code, duration, log)


class WorkdirPool:
    """One isolated project copy per worker, created on first use."""

    def __init__(self, spec: BugSpec, size: int | None = None, base_dir: str | Path | None = None):
        self.spec = spec
        self.size = size or default_pool_size()
        self.original = spec.source()
        self._tmp = tempfile.TemporaryDirectory(prefix="clozefix-", dir=base_dir)
        self._free: queue.Queue[Workdir] = queue.Queue()
        self._created = 0
        self._lock = threading.Lock()

    def _acquire(self) -> Workdir:
        with self._lock:
            make = self._free.empty() and self._created < self.size
            if make:
                self._created += 1
                n = self._created
        if make:
            return Workdir.create(Path(self.spec.project_root), Path(self._tmp.name) / f"w{n}")
        return self._free.get()

    def run_one(self, new_lines: Sequence[str]) -> ValidationOutcome:
        wd = self._acquire()
        try:
            original_text = apply_patch(wd, self.spec, new_lines, self.original)
            try:
                return validate(wd, self.spec)
            finally:
                revert(wd, self.spec, original_text)
                if not self.spec.incremental:
                    wd.scrub()
        finally:
            self._free.put(wd)

    def run_many(
        self, batch: Sequence[Sequence[str]], should_stop: Callable[[], bool] | None = None
    ) -> list[ValidationOutcome | None]:
        """Validate a batch; results keep batch order regardless of completion order."""
        if self.size == 1 or len(batch) <= 1:
            out: list[ValidationOutcome | None] = []
            for lines in batch:
                out.append(None if should_stop and should_stop() else self.run_one(lines))
            return out
        with ThreadPoolExecutor(max_workers=self.size) as ex:
            return list(ex.map(self.run_one, batch))

    def close(self) -> None:
        self._tmp.cleanup()

    def __enter__(self) -> "WorkdirPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def default_pool_size() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
