"""Run and bug configuration: defaults, TOML files, and flag precedence."""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import tomli

from .validation import DEFAULT_ENV_ALLOW, DEFAULT_TIME_LIMIT, DEFAULT_TIMEOUT, BugSpec

STOP_MODES = ("none", "first_plausible", "first_correct")
ALL_VARIANTS = ("base", "ki", "ro", "prompted-base")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # dataset construction
    mask_rate: float = 0.5
    iterations: int = 10
    mean_span_len: int = 3
    strategy: str = "template"
    # retrieval
    top_n: int = 5
    scope: str = "file"
    combined_prompt: bool = False
    with_types: bool = True
    frequent_cutoff: int = 50
    # generation
    samples: int = 5000
    validate_top: int = 1000
    top_p: float = 1.0
    temperature: float = 1.0
    context_limit: int = 512
    max_span_len: int = 64
    prompt_weight: float = 0.3
    order: int = 4
    alpha: float = 0.01
    # orchestration
    variants: tuple[str, ...] = ALL_VARIANTS
    backend: str = "reference"
    variant_backends: Mapping[str, str] = field(default_factory=dict)
    remote_url: str | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    stop: str = "none"
    workers: int | None = None
    ranks_per_round: int = 2
    seed: int = 0

    def __post_init__(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if not 0.0 < self.mask_rate < 1.0:
            bad("mask_rate", "must lie in (0, 1)")
        for name in ("iterations", "mean_span_len", "top_n", "samples", "validate_top", "context_limit",
                     "max_span_len", "order", "ranks_per_round"):
            if getattr(self, name) < 1:
                bad(name, "must be a positive integer")
        if self.strategy not in ("template", "ast", "line"):
            bad("strategy", f"unknown strategy {self.strategy!r} (template|ast|line)")
        if self.scope not in ("file", "project"):
            bad("scope", f"unknown scope {self.scope!r} (file|project)")
        if not 0.0 < self.top_p <= 1.0:
            bad("top_p", "must lie in (0, 1]")
        if self.temperature <= 0:
            bad("temperature", "must be positive")
        if not 0.0 <= self.prompt_weight <= 1.0:
            bad("prompt_weight", "must lie in [0, 1]")
        if self.alpha <= 0:
            bad("alpha", "must be positive")
        if self.time_limit <= 0:
            bad("time_limit", "must be positive")
        if self.stop not in STOP_MODES:
            bad("stop", f"one of {', '.join(STOP_MODES)}")
        for v in self.variants:
            if v not in ALL_VARIANTS:
                bad("variants", f"unknown variant {v!r}")
        for b in [self.backend, *self.variant_backends.values()]:
            if b not in ("reference", "remote"):
                bad("backend", f"unknown backend {b!r} (reference|remote)")
        if self.workers is not None and self.workers < 1:
            bad("workers", "must be a positive integer")

    def backend_for(self, variant: str) -> str:
        return self.variant_backends.get(variant, self.backend)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["variants"] = list(self.variants)
        d["variant_backends"] = dict(sorted(self.variant_backends.items()))
        return d


RUN_FIELDS = {f.name: f for f in fields(RunConfig)}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^[ \t]*\"?{re.escape(key)}\"?[ \t]*=", re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(path: Path, text: str, key: str) -> str:
    line = _line_of(text, key)
    return f"{path}:{line}" if line else str(path)


def read_toml(path: str | Path) -> tuple[dict, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        return tomli.loads(text), text
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def coerce_field(name: str, value: Any, where: str) -> Any:
    f = RUN_FIELDS[name]
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    kind = type(default)
    if name == "variants":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where}: field 'variants' must be a list of strings")
        return tuple(value)
    if name == "variant_backends":
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: field 'variant_backends' must be a table")
        return dict(value)
    if default is None:
        return value
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{where}: field '{name}' expects {kind.__name__}, got {type(value).__name__}")
    return value


def load_run_config(path: str | Path) -> dict:
    """Validated overrides from a run config file (top level or a [run] table)."""
    data, text = read_toml(path)
    table = data.get("run", data)
    out = {}
    for key, value in table.items():
        if isinstance(value, dict) and key != "variant_backends":
            continue  # other tables (e.g. [sweep]) belong to other readers
        where = _where(Path(path), text, key)
        if key not in RUN_FIELDS:
            raise ConfigError(f"{where}: unknown field '{key}'")
        out[key] = coerce_field(key, value, where)
    return out


def resolve_run_config(file_values: Mapping[str, Any] | None = None, flags: Mapping[str, Any] | None = None) -> RunConfig:
    """Flag > config file > built-in default; ``None`` flags are unset."""
    merged: dict[str, Any] = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_with_file(path: str | Path | None, flags: Mapping[str, Any] | None = None) -> RunConfig:
    """Like ``resolve_run_config`` but invalid file values are reported with their line."""
    values = load_run_config(path) if path else {}
    try:
        return resolve_run_config(values, flags)
    except ConfigError as exc:
        name = str(exc).split(":", 1)[0]
        if path and name in values and (flags or {}).get(name) is None:
            text = Path(path).read_text(encoding="utf-8")
            raise ConfigError(f"{_where(Path(path), text, name)}: field {exc}") from exc
        raise


_BUG_TYPES = {
    "bug_id": str,
    "project_root": str,
    "file": str,
    "buggy_line_no": int,
    "compile_command": str,
    "test_command": str,
    "timeout_seconds": (int, float),
    "time_limit": (int, float),
    "include": list,
    "exclude": list,
    "env_allow": list,
    "expected_fix": str,
    "expected_fix_file": str,
    "frequent_cutoff": int,
    "incremental": bool,
    "plant_line": str,
}
_BUG_REQUIRED = ("project_root", "file", "buggy_line_no", "test_command")


def load_bug(path: str | Path) -> BugSpec:
    """Parse a bug config; relative paths resolve against the config's directory."""
    path = Path(path)
    data, text = read_toml(path)
    table = data.get("bug", data)
    for key, value in table.items():
        where = _where(path, text, key)
        if key not in _BUG_TYPES:
            raise ConfigError(f"{where}: unknown field '{key}'")
        want = _BUG_TYPES[key]
        if not isinstance(value, want) or (want is int and isinstance(value, bool)):
            raise ConfigError(f"{where}: field '{key}' has the wrong type ({type(value).__name__})")
    for key in _BUG_REQUIRED:
        if key not in table:
            raise ConfigError(f"{path}: missing required field '{key}'")
    base = path.parent
    root = (base / table["project_root"]).resolve()
    expected = table.get("expected_fix")
    if "expected_fix_file" in table:
        fix_path = base / table["expected_fix_file"]
        try:
            expected = fix_path.read_text(encoding="utf-8").rstrip("\n")
        except OSError as exc:
            raise ConfigError(f"{_where(path, text, 'expected_fix_file')}: cannot read {fix_path}: {exc}") from exc
    kwargs = dict(
        project_root=root,
        file=table["file"],
        buggy_line_no=table["buggy_line_no"],
        test_command=table["test_command"],
        compile_command=table.get("compile_command"),
        timeout_seconds=float(table.get("timeout_seconds", DEFAULT_TIMEOUT)),
        time_limit=float(table.get("time_limit", DEFAULT_TIME_LIMIT)),
        bug_id=table.get("bug_id", path.stem),
        env_allow=tuple(table.get("env_allow", DEFAULT_ENV_ALLOW)),
        expected_fix=expected,
        frequent_cutoff=table.get("frequent_cutoff"),
        incremental=table.get("incremental", False),
        plant_line=table.get("plant_line"),
    )
    if "include" in table:
        kwargs["include"] = tuple(table["include"])
    if "exclude" in table:
        kwargs["exclude"] = tuple(table["exclude"])
    try:
        spec = BugSpec(**kwargs)
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not root.is_dir():
        raise ConfigError(f"{_where(path, text, 'project_root')}: project_root {root} is not a directory")
    spec.source()  # buggy line must exist
    return spec
