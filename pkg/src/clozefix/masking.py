"""Fine-tuning dataset construction from a project corpus.

Two families of builders:

* ``build_ki_dataset`` -- knowledge-intensified multi-span masking at a high
  mask rate, re-drawn on every iteration.
* ``build_ro_dataset`` -- repair-oriented single-span masking of one line per
  sample, by repair template, pseudo-AST subrange, or whole line.
"""
from __future__ import annotations

import json
import logging
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import templates as tpl
from .corpus import FunctionUnit, ProjectCorpus
from .lexer import OPERATOR, is_code_text, keywords_for, tokenize

log = logging.getLogger(__name__)

KI = "KI"
RO_TEMPLATE = "RO-template"
RO_AST = "RO-ast"
RO_LINE = "RO-line"
RO_STRATEGIES = (RO_TEMPLATE, RO_AST, RO_LINE)
STRATEGIES = (KI,) + RO_STRATEGIES
STRATEGY_ALIASES = {"template": RO_TEMPLATE, "ast": RO_AST, "line": RO_LINE}

_SENTINEL = re.compile(r"<extra_id_(\d+)>\Z")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SpanMarker:
    index: int

    def __str__(self) -> str:
        return f"<extra_id_{self.index}>"


@dataclass(frozen=True)
class FunctionRef:
    file: str
    start_line: int
    end_line: int

    @classmethod
    def of(cls, fn: FunctionUnit) -> "FunctionRef":
        return cls(fn.file, fn.start_line, fn.end_line)


@dataclass(frozen=True)
class MaskingConfig:
    mask_rate: float = 0.50
    iterations: int = 10
    mean_span_len: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mask_rate < 1.0:
            raise ValueError(f"mask_rate must lie in (0, 1), got {self.mask_rate}")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.mean_span_len < 1:
            raise ValueError("mean_span_len must be positive")


@dataclass(frozen=True)
class MaskedSample:
    source_fn: FunctionRef
    masked_input: tuple  # str | SpanMarker
    targets: tuple[tuple[SpanMarker, tuple[str, ...]], ...]
    strategy: str
    iteration: int
    rng_seed: int
    template: str = ""

    def reconstruct(self) -> list[str]:
        fills = {m: toks for m, toks in self.targets}
        out: list[str] = []
        for item in self.masked_input:
            if isinstance(item, SpanMarker):
                out.extend(fills[item])
            else:
                out.append(item)
        return out

    def masked_code_count(self) -> int:
        return sum(is_code_text(t) for _, toks in self.targets for t in toks)


def derive_seed(seed: int, fn: FunctionUnit | FunctionRef, iteration: int, salt: str = "") -> int:
    """64-bit stream seed for one (function, iteration) pair."""
    fid = zlib.crc32(f"{fn.file}:{fn.start_line}:{salt}".encode())
    state = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, fid, iteration]).generate_state(1, np.uint64)
    return int(state[0])


def _spans_to_sample(
    fn: FunctionUnit,
    texts: Sequence[str],
    spans: Sequence[tuple[int, int]],
    strategy: str,
    iteration: int,
    rng_seed: int,
    template: str = "",
) -> MaskedSample:
    """Replace full-token ranges ``[a, b)`` (sorted, disjoint) by sentinels."""
    masked: list = []
    targets = []
    pos = 0
    for k, (a, b) in enumerate(spans):
        masked.extend(texts[pos:a])
        marker = SpanMarker(k)
        masked.append(marker)
        targets.append((marker, tuple(texts[a:b])))
        pos = b
    masked.extend(texts[pos:])
    return MaskedSample(FunctionRef.of(fn), tuple(masked), tuple(targets), strategy, iteration, rng_seed, template)


def _code_positions(fn: FunctionUnit) -> list[int]:
    return [i for i, t in enumerate(fn.tokens) if t.is_code]


def _draw_mask(m: int, budget: int, mean_len: int, rng: np.random.Generator) -> np.ndarray:
    masked = np.zeros(m, dtype=bool)
    remaining = budget
    p = 1.0 / mean_len
    while remaining > 0:
        length = min(int(rng.geometric(p)), remaining)
        # run[i]: number of consecutive free slots starting at i
        idx = np.arange(m)
        next_masked = np.minimum.accumulate(np.where(masked, idx, m)[::-1])[::-1]
        run = next_masked - idx
        length = min(length, int(run.max()))
        starts = np.flatnonzero(run >= length)
        s = int(starts[rng.integers(len(starts))])
        masked[s : s + length] = True
        remaining -= length
    return masked


def mask_function_ki(fn: FunctionUnit, cfg: MaskingConfig, iteration: int) -> MaskedSample | None:
    positions = _code_positions(fn)
    m = len(positions)
    if m < 2:
        return None
    rng_seed = derive_seed(cfg.seed, fn, iteration, KI)
    rng = np.random.default_rng(rng_seed)
    budget = min(max(1, int(round(cfg.mask_rate * m))), m - 1)
    masked = _draw_mask(m, budget, cfg.mean_span_len, rng)
    spans: list[tuple[int, int]] = []
    i = 0
    while i < m:
        if masked[i]:
            j = i
            while j + 1 < m and masked[j + 1]:
                j += 1
            spans.append((positions[i], positions[j] + 1))
            i = j + 1
        else:
            i += 1
    texts = [t.text for t in fn.tokens]
    return _spans_to_sample(fn, texts, spans, KI, iteration, rng_seed)


def build_ki_dataset(corpus: ProjectCorpus, cfg: MaskingConfig = MaskingConfig()) -> list[MaskedSample]:
    if not corpus.functions:
        raise DatasetError("corpus has no functions to mask")
    out: list[MaskedSample] = []
    for fn in corpus.functions:
        for it in range(cfg.iterations):
            sample = mask_function_ki(fn, cfg, it)
            if sample is None:
                log.warning("skipping %s: fewer than 2 maskable tokens", fn.key)
                break
            out.append(sample)
    return out


# -- repair-oriented -------------------------------------------------------


def _line_tokens(fn: FunctionUnit, line_no: int) -> list[int]:
    return [i for i, t in enumerate(fn.tokens) if t.is_code and t.line == line_no]


def eligible_lines(fn: FunctionUnit, lines: Sequence[str]) -> list[int]:
    """Body lines (after the opening-brace line) whose line-local lexing agrees with the file."""
    kw = keywords_for(fn.file)
    out = []
    for line_no in range(fn.body_line + 1, fn.end_line + 1):
        idx = _line_tokens(fn, line_no)
        if not idx:
            continue
        local = [(t.text, t.col) for t in tokenize(lines[line_no - 1], kw) if t.is_code]
        if local == [(fn.tokens[i].text, fn.tokens[i].col) for i in idx]:
            out.append(line_no)
    return out


def _char_range_to_tokens(fn: FunctionUnit, idx: Sequence[int], start: int, end: int) -> tuple[int, int]:
    """Map a masked character range of a line to a full-token range ``[a, b)``."""
    inside = [i for i in idx if fn.tokens[i].col >= start and fn.tokens[i].col + len(fn.tokens[i].text) <= end]
    if inside:
        return inside[0], inside[-1] + 1
    after = [i for i in idx if fn.tokens[i].col >= end]
    point = after[0] if after else idx[-1] + 1
    return point, point


def _ast_candidates(fn: FunctionUnit, idx: Sequence[int]) -> list[tuple[int, int]]:
    """Bracket-group contents and operator-delimited operands, as positions into ``idx``."""
    toks = [fn.tokens[i] for i in idx]
    groups = [(0, len(toks))]
    stack: list[int] = []
    for k, t in enumerate(toks):
        if t.text in ("(", "["):
            stack.append(k)
        elif t.text in (")", "]") and stack:
            open_ = stack.pop()
            if k > open_ + 1:
                groups.append((open_ + 1, k))
    cands: list[tuple[int, int]] = []
    for a, b in groups:
        if (a, b) != (0, len(toks)):
            cands.append((a, b))
        depth, run_start = 0, a
        for k in range(a, b):
            t = toks[k]
            if t.text in ("(", "[", "{"):
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
            if depth == 0 and (t.kind == OPERATOR or t.text in (",", ";")):
                if k > run_start:
                    cands.append((run_start, k))
                run_start = k + 1
        if b > run_start:
            cands.append((run_start, b))
    seen, out = set(), []
    for c in cands:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def mask_function_ro(
    fn: FunctionUnit, lines: Sequence[str], strategy: str, cfg: MaskingConfig, iteration: int
) -> MaskedSample | None:
    eligible = eligible_lines(fn, lines)
    if not eligible:
        return None
    rng_seed = derive_seed(cfg.seed, fn, iteration, strategy)
    rng = np.random.default_rng(rng_seed)
    line_no = eligible[int(rng.integers(len(eligible)))]
    idx = _line_tokens(fn, line_no)
    texts = [t.text for t in fn.tokens]
    template_id = ""
    if strategy == RO_LINE:
        a, b = idx[0], idx[-1] + 1
    elif strategy == RO_TEMPLATE:
        kw = keywords_for(fn.file)
        line = lines[line_no - 1]
        options = tpl.enumerate_applicable(line, kw)
        chosen = options[int(rng.integers(len(options)))]
        template_id = chosen.id
        if chosen.variant in tpl.INSERTS:
            # at training time the chosen line plays the inserted line
            a, b = idx[0], idx[-1] + 1
        else:
            start, end = tpl.masked_range(chosen, line, kw)
            a, b = _char_range_to_tokens(fn, idx, start, end)
    elif strategy == RO_AST:
        cands = _ast_candidates(fn, idx)
        lo, hi = cands[int(rng.integers(len(cands)))]
        a, b = idx[lo], idx[hi - 1] + 1
    else:
        raise DatasetError(f"unknown repair-oriented strategy {strategy!r}")
    return _spans_to_sample(fn, texts, [(a, b)], strategy, iteration, rng_seed, template_id)


def build_ro_dataset(
    corpus: ProjectCorpus, strategy: str = RO_TEMPLATE, cfg: MaskingConfig = MaskingConfig()
) -> list[MaskedSample]:
    strategy = STRATEGY_ALIASES.get(strategy, strategy)
    if strategy not in RO_STRATEGIES:
        raise DatasetError(f"unknown repair-oriented strategy {strategy!r}")
    if not corpus.functions:
        raise DatasetError("corpus has no functions to mask")
    out: list[MaskedSample] = []
    lines_of = {f.relative_path: f.lines for f in corpus.files}
    for fn in corpus.functions:
        for it in range(cfg.iterations):
            sample = mask_function_ro(fn, lines_of[fn.file], strategy, cfg, it)
            if sample is None:
                log.warning("skipping %s: no eligible body line", fn.key)
                break
            out.append(sample)
    return out


# -- dataset files -----------------------------------------------------------


def _encode(sample: MaskedSample) -> dict:
    ref = sample.source_fn
    return {
        "file": ref.file,
        "start_line": ref.start_line,
        "end_line": ref.end_line,
        "strategy": sample.strategy,
        "iteration": sample.iteration,
        "rng_seed": sample.rng_seed,
        "template": sample.template,
        "masked": [str(x) for x in sample.masked_input],
        "targets": [[str(m), list(toks)] for m, toks in sample.targets],
    }


def _marker(text: str) -> SpanMarker | None:
    m = _SENTINEL.match(text)
    return SpanMarker(int(m.group(1))) if m else None


def _decode(rec: dict) -> MaskedSample:
    masked = tuple(_marker(t) or t for t in rec["masked"])
    targets = []
    for sentinel, toks in rec["targets"]:
        marker = _marker(sentinel)
        if marker is None:
            raise ValueError(f"bad sentinel {sentinel!r}")
        targets.append((marker, tuple(toks)))
    return MaskedSample(
        FunctionRef(rec["file"], int(rec["start_line"]), int(rec["end_line"])),
        masked,
        tuple(targets),
        rec["strategy"],
        int(rec["iteration"]),
        int(rec["rng_seed"]),
        rec.get("template", ""),
    )


def meta_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.json")


def write_dataset(samples: Iterable[MaskedSample], path: str | Path, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(_encode(s), ensure_ascii=False) + "\n")
    if metadata is not None:
        meta = {"token_granularity": "lexer tokens", **metadata}
        meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_dataset(path: str | Path) -> list[MaskedSample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(_decode(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DatasetError(f"{path}: malformed record at line {n}: {exc}") from exc
    return out


def read_metadata(path: str | Path) -> dict:
    p = meta_path(path)
    return json.loads(p.read_text(encoding="utf-8")) if p.exists() else {}
