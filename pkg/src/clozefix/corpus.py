"""Project ingestion: source files, function units and the identifier index."""
from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .lexer import (
    IDENTIFIER,
    PRIMITIVE_TYPES,
    Token,
    keywords_for,
    tokenize,
)

log = logging.getLogger(__name__)

DEFAULT_INCLUDE = ("**/*.java",)
DEFAULT_EXCLUDE = ("**/test/**",)
CACHE_FORMAT = "clozefix-corpus"
CACHE_VERSION = 1

MODIFIERS = frozenset(
    """
    public private protected static final abstract synchronized native strictfp
    default transient volatile virtual inline explicit constexpr extern friend
    """.split()
)
_SIG_TRAILERS = frozenset({"const", "override", "noexcept", "final", "volatile"})
_NOT_BEFORE_NAME = frozenset({"new", "return", "throw", "else", "case", "goto", "sizeof", "delete"})


class IngestError(Exception):
    pass


@dataclass(frozen=True)
class SourceFile:
    relative_path: str
    lines: tuple[str, ...]
    trailing_newline: bool = True
    crlf: bool = False

    @classmethod
    def from_text(cls, relative_path: str, raw: str) -> "SourceFile":
        crlf = "\r\n" in raw
        text = raw.replace("\r\n", "\n")
        trailing = text.endswith("\n")
        body = text[:-1] if trailing else text
        lines = tuple(body.split("\n")) if body or trailing else ()
        return cls(relative_path, lines, trailing, crlf)

    @cached_property
    def text(self) -> str:
        body = "\n".join(self.lines)
        return body + "\n" if self.trailing_newline else body

    @cached_property
    def tokens(self) -> tuple[Token, ...]:
        return tuple(tokenize(self.text, keywords_for(self.relative_path)))

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for tok in self.tokens:
            out.append(pos)
            pos += len(tok.text)
        return tuple(out)

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def line(self, line_no: int) -> str:
        return self.lines[line_no - 1]

    def render(self, lines: Sequence[str]) -> str:
        """Serialize replacement lines with this file's newline conventions."""
        nl = "\r\n" if self.crlf else "\n"
        body = nl.join(lines)
        return body + nl if self.trailing_newline else body


@dataclass(frozen=True)
class FunctionUnit:
    file: str
    start_line: int
    end_line: int
    tokens: tuple[Token, ...]
    signature_text: str
    name: str = ""
    start_offset: int = 0
    body_line: int = 0  # line holding the opening brace

    @property
    def text(self) -> str:
        return "".join(t.text for t in self.tokens)

    @property
    def key(self) -> str:
        return f"{self.file}:{self.start_line}"

    def contains(self, line_no: int) -> bool:
        return self.start_line <= line_no <= self.end_line


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    col: int


@dataclass(frozen=True, eq=False)
class ProjectCorpus:
    root_path: str
    files: tuple[SourceFile, ...]
    functions: tuple[FunctionUnit, ...]
    index: dict[str, tuple[Location, ...]] = field(hash=False, compare=False)
    warnings: tuple[str, ...] = ()

    def file(self, relative_path: str) -> SourceFile:
        for f in self.files:
            if f.relative_path == relative_path:
                return f
        raise KeyError(relative_path)

    def functions_in(self, relative_path: str) -> list[FunctionUnit]:
        return [fn for fn in self.functions if fn.file == relative_path]

    def function_at(self, relative_path: str, line_no: int) -> FunctionUnit | None:
        hits = [fn for fn in self.functions_in(relative_path) if fn.contains(line_no)]
        return hits[0] if hits else None

    @cached_property
    def identifier_counts(self) -> Counter:
        return Counter({name: len(locs) for name, locs in self.index.items()})


def _matches(rel: str, patterns: Iterable[str]) -> bool:
    return any(fnmatch.fnmatch(rel, p) or fnmatch.fnmatch("/" + rel, p) for p in patterns)


def _read(path: Path) -> str | None:
    try:
        return path.read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        return None


def ingest(
    root: str | Path,
    include_globs: Sequence[str] = DEFAULT_INCLUDE,
    exclude_globs: Sequence[str] = DEFAULT_EXCLUDE,
    workers: int = 4,
) -> ProjectCorpus:
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"project root {root} is not a readable directory")
    paths: set[Path] = set()
    for pattern in include_globs:
        paths.update(p for p in root.glob(pattern) if p.is_file())
    rels = sorted(p.relative_to(root).as_posix() for p in paths)
    rels = [r for r in rels if not _matches(r, exclude_globs)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        contents = list(pool.map(lambda r: _read(root / r), rels))
    files, warnings = [], []
    for rel, raw in zip(rels, contents):
        if raw is None:
            warnings.append(f"{rel}: not valid UTF-8, skipped")
            log.warning("skipping undecodable file %s", rel)
            continue
        files.append(SourceFile.from_text(rel, raw))
    return build_corpus(str(root), files, warnings)


def build_corpus(root: str, files: Sequence[SourceFile], warnings: Sequence[str] = ()) -> ProjectCorpus:
    functions: list[FunctionUnit] = []
    for f in files:
        functions.extend(extract_functions(f))
    return ProjectCorpus(root, tuple(files), tuple(functions), _build_index(functions), tuple(warnings))


def _build_index(functions: Iterable[FunctionUnit]) -> dict[str, tuple[Location, ...]]:
    index: dict[str, list[Location]] = {}
    for fn in functions:
        for tok in fn.tokens:
            if tok.kind == IDENTIFIER:
                index.setdefault(tok.text, []).append(Location(fn.file, tok.line, tok.col))
    return {k: tuple(v) for k, v in index.items()}


def _match_forward(code: Sequence[Token], i: int, open_: str, close: str) -> int | None:
    depth = 0
    for j in range(i, len(code)):
        t = code[j].text
        if t == open_:
            depth += 1
        elif t == close:
            depth -= 1
            if depth == 0:
                return j
    return None


def _sig_start(code: Sequence[Token], name_idx: int) -> int:
    """Walk back over return type, modifiers, generics and annotations."""
    i = name_idx
    depth = 0
    while i > 0:
        t = code[i - 1]
        text = t.text
        if text in (">", ">>"):
            depth += len(text)
        elif text == "<":
            depth -= 1
        elif text == "," and depth > 0:
            pass
        elif t.kind == IDENTIFIER or text in MODIFIERS or text in PRIMITIVE_TYPES:
            pass
        elif text in ("[", "]", "::", "*", "&", "~", "@", ".", "?", "extends", "super", "const"):
            pass
        else:
            break
        i -= 1
    return i


def _plausible_prev(tok: Token | None) -> bool:
    if tok is None:
        return True
    text = tok.text
    if text in _NOT_BEFORE_NAME:
        return False
    if tok.kind == IDENTIFIER or text in MODIFIERS or text in PRIMITIVE_TYPES:
        return True
    return text in (">", ">>", "]", "*", "&", "::", "~", "{", "}", ";", ":")


def extract_functions(source: SourceFile) -> list[FunctionUnit]:
    """Find method/constructor definitions by signature shape plus brace matching."""
    all_tokens = source.tokens
    code_idx = [k for k, t in enumerate(all_tokens) if t.is_code]
    code = [all_tokens[k] for k in code_idx]
    out: list[FunctionUnit] = []
    i = 0
    while i < len(code) - 1:
        tok = code[i]
        if tok.kind != IDENTIFIER or code[i + 1].text != "(":
            i += 1
            continue
        prev = code[i - 1] if i else None
        if not _plausible_prev(prev) or (prev is not None and prev.text in (".", "->")):
            i += 1
            continue
        close = _match_forward(code, i + 1, "(", ")")
        if close is None:
            break
        k = close + 1
        while k < len(code) and code[k].text in _SIG_TRAILERS:
            k += 1
        if k < len(code) and code[k].text == "throws":
            k += 1
            while k < len(code) and (code[k].kind == IDENTIFIER or code[k].text in (",", ".")):
                k += 1
        elif k < len(code) and code[k].text == ":":
            # constructor initializer list
            depth = 0
            while k < len(code) and not (depth == 0 and code[k].text in ("{", ";")):
                if code[k].text == "(":
                    depth += 1
                elif code[k].text == ")":
                    depth -= 1
                k += 1
        if k >= len(code) or code[k].text != "{":
            i += 1
            continue
        end = _match_forward(code, k, "{", "}")
        if end is None:
            break
        start = _sig_start(code, i)
        first, last = code_idx[start], code_idx[end]
        toks = all_tokens[first : last + 1]
        sig = " ".join(t.text for t in code[start:k])
        out.append(
            FunctionUnit(
                file=source.relative_path,
                start_line=code[start].line,
                end_line=code[end].line,
                tokens=tuple(toks),
                signature_text=sig,
                name=tok.text,
                start_offset=source.offsets[first],
                body_line=code[k].line,
            )
        )
        i = end + 1
    return out


def extract_lines(source: SourceFile) -> list[tuple[int, str]]:
    """Lines carrying at least one code token, with 1-based line numbers."""
    code_lines = {t.line for t in source.tokens if t.is_code}
    return [(n, source.lines[n - 1]) for n in sorted(code_lines) if n <= len(source.lines)]


def save_corpus(corpus: ProjectCorpus, path: str | Path, config: dict | None = None) -> None:
    header = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "root": corpus.root_path,
        "config": config or {},
        "warnings": list(corpus.warnings),
        "files": [
            {"path": f.relative_path, "text": f.text, "crlf": f.crlf} for f in corpus.files
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for fn in corpus.functions:
            rec = {"file": fn.file, "start_line": fn.start_line, "end_line": fn.end_line, "name": fn.name}
            fh.write(json.dumps(rec) + "\n")


def load_corpus(path: str | Path) -> ProjectCorpus:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise IngestError(f"{path}: empty corpus cache")
    header = json.loads(lines[0])
    if header.get("format") != CACHE_FORMAT or header.get("version") != CACHE_VERSION:
        raise IngestError(f"{path}: not a corpus cache (format/version mismatch)")
    files = []
    for rec in header["files"]:
        f = SourceFile.from_text(rec["path"], rec["text"])
        if rec.get("crlf"):
            f = SourceFile(f.relative_path, f.lines, f.trailing_newline, True)
        files.append(f)
    corpus = build_corpus(header["root"], files, header.get("warnings", ()))
    stored = [(r["file"], r["start_line"], r["end_line"]) for r in map(json.loads, lines[1:])]
    rebuilt = [(fn.file, fn.start_line, fn.end_line) for fn in corpus.functions]
    if stored != rebuilt:
        raise IngestError(f"{path}: function records do not match re-extraction")
    return corpus
