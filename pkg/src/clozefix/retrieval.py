"""Relevant-identifier retrieval and prompt construction.

Pipeline for one buggy line: rank the lines of the buggy file by edit-distance
similarity, pull identifiers out of the ranked lines, drop the common ones,
keep those in scope at the buggy line, attach declared types, and render one
comment prompt per identifier.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .corpus import ProjectCorpus, extract_lines
from .lexer import IDENTIFIER, keywords_for, tokenize
from .scope import METHOD, VARIABLE, Decl, base_type, scope_index

DEFAULT_TOP_N = 5
DEFAULT_FREQUENT_CUTOFF = 50
MIN_NAME_LENGTH = 4


class RetrievalError(ValueError):
    pass


def normalize(line: str) -> str:
    return " ".join(line.split())


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, bit-parallel over the shorter string."""
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return len(b)
    peq: dict[str, int] = {}
    for i, ch in enumerate(a):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    full = (1 << m) - 1
    high = 1 << (m - 1)
    pv, mv, score = full, 0, m
    for ch in b:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = (ph << 1) | 1
        mh <<= 1
        pv = (mh | ~(xv | ph)) & full
        mv = ph & xv & full
    return score


def levenshtein_ratio(a: str, b: str) -> float:
    a, b = normalize(a), normalize(b)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


@dataclass(frozen=True)
class RankedLine:
    file: str
    line_no: int
    text: str
    similarity: float


def rank_lines(
    buggy_line: str, lines: Iterable[tuple[int, str]], file: str = "", exclude: int | None = None
) -> list[RankedLine]:
    scored = [
        RankedLine(file, n, text, levenshtein_ratio(buggy_line, text))
        for n, text in lines
        if n != exclude
    ]
    return sorted(scored, key=lambda r: (-r.similarity, r.file, r.line_no))


def extract_ids(line: str, keywords=None) -> list[tuple[str, str]]:
    kw = keywords if keywords is not None else keywords_for("")
    seen: set[str] = set()
    out: list[tuple[str, str]] = []
    for tok in tokenize(line, kw):
        if tok.kind == IDENTIFIER and tok.text not in seen:
            seen.add(tok.text)
            out.append((tok.text, METHOD if tok.call_candidate else VARIABLE))
    return out


@lru_cache(maxsize=1)
def default_stoplist() -> frozenset[str]:
    text = resources.files("clozefix").joinpath("data/stoplist.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def frequent_identifiers(corpus: ProjectCorpus, cutoff: int = DEFAULT_FREQUENT_CUTOFF) -> frozenset[str]:
    ranked = sorted(corpus.identifier_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return frozenset(name for name, _ in ranked[:cutoff])


def simple_filter(
    ids: Sequence[tuple[str, str]],
    stoplist: Iterable[str] | None = None,
    frequent: Iterable[str] = (),
) -> list[tuple[str, str]]:
    stop = default_stoplist() if stoplist is None else frozenset(stoplist)
    frequent = frozenset(frequent)
    return [
        (name, kind)
        for name, kind in ids
        if len(name) >= MIN_NAME_LENGTH and name not in stop and name not in frequent
    ]


def find_accessible_ids(corpus: ProjectCorpus, file: str, buggy_line_no: int) -> set[str]:
    if corpus.function_at(file, buggy_line_no) is None:
        raise RetrievalError(f"{file}:{buggy_line_no} is not inside any function")
    index = scope_index(corpus)
    fs = index.files[file]
    visible = index.visible_decls(file, buggy_line_no)
    names = {d.name for d in visible}
    names.update(fs.imports)
    names.update(c.name for c in fs.classes)
    # members reachable through a typed receiver or an imported class
    reachable = {base_type(d.type) for d in visible if d.kind == VARIABLE} | set(fs.imports)
    for cls in reachable:
        names.update(d.name for d in index.class_members(cls))
    return names


@dataclass(frozen=True)
class TypeInfo:
    type: str
    kind: str
    ambiguous: bool = False


def find_type_info(
    corpus: ProjectCorpus, names: Iterable[str], file: str | None = None, line: int | None = None
) -> dict[str, TypeInfo]:
    """Declared type (variables) or return type (methods); in-scope declarations win."""
    index = scope_index(corpus)
    decls: list[Decl] = []
    if file is not None and line is not None and corpus.function_at(file, line) is not None:
        decls.extend(index.visible_decls(file, line))
    decls.extend(index.all_decls())
    by_name: dict[str, list[Decl]] = {}
    for d in decls:
        by_name.setdefault(d.name, []).append(d)
    out: dict[str, TypeInfo] = {}
    for name in names:
        found = by_name.get(name)
        if not found:
            continue
        first = found[0]
        same_kind = {d.type for d in found if d.kind == first.kind}
        out[name] = TypeInfo(first.type, first.kind, len(same_kind) > 1)
    return out


@dataclass(frozen=True)
class RankedIdentifier:
    name: str
    kind: str
    type_info: str | None
    similarity: float
    donor: tuple[str, int]
    rank: int
    ambiguous: bool = False

    def render(self, with_type: bool = True) -> str:
        call = "()" if self.kind == METHOD else ""
        if with_type and self.type_info:
            return f"({self.type_info}) {self.name}{call}"
        return f"{self.name}{call}"


@dataclass(frozen=True)
class Prompt:
    text: str
    identifiers: tuple[RankedIdentifier, ...]

    @property
    def identifier(self) -> RankedIdentifier:
        return self.identifiers[0]


def prompt_text(rendered: str) -> str:
    return f"/* use {rendered} in the next line */"


def build_prompts(
    ranked_ids: Sequence[RankedIdentifier], n: int = DEFAULT_TOP_N, combined: bool = False, with_types: bool = True
) -> list[Prompt]:
    if n < 1:
        raise ValueError("n must be at least 1")
    top = list(ranked_ids[:n])
    if not top:
        return []
    if combined:
        rendered = ", ".join(r.render(with_types) for r in top)
        return [Prompt(prompt_text(rendered), tuple(top))]
    return [Prompt(prompt_text(r.render(with_types)), (r,)) for r in top]


def candidate_lines(corpus: ProjectCorpus, file: str, scope: str = "file") -> list[tuple[str, int, str]]:
    if scope == "file":
        files = [corpus.file(file)]
    elif scope == "project":
        files = list(corpus.files)
    else:
        raise RetrievalError(f"unknown retrieval scope {scope!r}")
    return [(f.relative_path, n, text) for f in files for n, text in extract_lines(f)]


def rank_identifiers(
    corpus: ProjectCorpus,
    file: str,
    buggy_line_no: int,
    scope: str = "file",
    frequent_cutoff: int = DEFAULT_FREQUENT_CUTOFF,
    stoplist: Iterable[str] | None = None,
) -> list[RankedIdentifier]:
    """Every accessible, non-trivial identifier from similar lines, best donor first."""
    source = corpus.file(file)
    buggy = source.line(buggy_line_no)
    kw = keywords_for(file)
    pool = [
        (f, n, text) for f, n, text in candidate_lines(corpus, file, scope) if not (f == file and n == buggy_line_no)
    ]
    ranked = sorted(
        (RankedLine(f, n, text, levenshtein_ratio(buggy, text)) for f, n, text in pool),
        key=lambda r: (-r.similarity, r.file != file, r.file, r.line_no),
    )
    frequent = frequent_identifiers(corpus, frequent_cutoff) if frequent_cutoff > 0 else frozenset()
    seen: dict[str, tuple[str, RankedLine]] = {}
    for rl in ranked:
        for name, kind in simple_filter(extract_ids(rl.text, kw), stoplist, frequent):
            if name not in seen:
                seen[name] = (kind, rl)
    accessible = find_accessible_ids(corpus, file, buggy_line_no)
    relevant = [(name, kind, rl) for name, (kind, rl) in seen.items() if name in accessible]
    relevant.sort(key=lambda x: (-x[2].similarity, x[2].file != file, x[2].file, x[2].line_no, x[0]))
    types = find_type_info(corpus, [r[0] for r in relevant], file, buggy_line_no)
    out = []
    for rank, (name, kind, rl) in enumerate(relevant, start=1):
        info = types.get(name)
        out.append(
            RankedIdentifier(
                name=name,
                kind=kind,
                type_info=info.type if info else None,
                similarity=rl.similarity,
                donor=(rl.file, rl.line_no),
                rank=rank,
                ambiguous=info.ambiguous if info else False,
            )
        )
    return out


def retrieve(
    corpus: ProjectCorpus,
    file: str,
    buggy_line_no: int,
    top_n: int = DEFAULT_TOP_N,
    scope: str = "file",
    combined: bool = False,
    with_types: bool = True,
    frequent_cutoff: int = DEFAULT_FREQUENT_CUTOFF,
) -> tuple[list[RankedIdentifier], list[Prompt]]:
    ranked = rank_identifiers(corpus, file, buggy_line_no, scope, frequent_cutoff)
    return ranked, build_prompts(ranked, top_n, combined, with_types)
