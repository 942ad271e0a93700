"""Masked-span predictors.

``ReferenceModel`` is a count-based n-gram model over lexer tokens. Fine-tuning
it means ingesting masked samples: every masked token (and the token right
after each span) is counted against the code tokens that precede it. At
inference time the visible input window is overlaid on the trained counts, so
tokens present in the context can be copied while tokens outside it are only
reachable through training or a prompt.

Smoothing is interpolated add-alpha: each order's counts are mixed with the
next-lower order using a pseudo-count of ``alpha`` per vocabulary item,
bottoming out in a uniform distribution over the vocabulary, so every token
gets a finite log-probability.
"""
from __future__ import annotations

import json
from bisect import bisect_left
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lexer import code_tokens, is_code_text, tokenize
from .masking import MaskedSample
from .retrieval import Prompt
from .templates import DEFAULT_CONTEXT_LIMIT, MaskedRepairInput

BASE, KI, RO, PROMPTED = "base", "ki", "ro", "prompted-base"
VARIANTS = (BASE, KI, RO, PROMPTED)
REFERENCE, REMOTE = "reference", "remote"

END_TOKEN = "<extra_id_1>"
EOF_TOKEN = "<eof>"
DEFAULT_ORDER = 4
DEFAULT_ALPHA = 0.01
DEFAULT_PROMPT_WEIGHT = 0.3
DEFAULT_MAX_SPAN = 64
SNAPSHOT_HEADER = "clozefix-reference-model 1"

_OPEN = frozenset("([{")
_CLOSE = frozenset(")]}")


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class SpanSample:
    tokens: tuple[str, ...]
    token_logprobs: tuple[float, ...]
    terminated: bool

    def __post_init__(self):
        if len(self.tokens) != len(self.token_logprobs):
            raise ValueError("tokens and token_logprobs differ in length")

    @property
    def fill_tokens(self) -> tuple[str, ...]:
        if self.terminated and self.tokens and self.tokens[-1] == END_TOKEN:
            return self.tokens[:-1]
        return self.tokens


def score_patch(token_logprobs: Sequence[float]) -> float:
    """Mean per-token log-probability."""
    if len(token_logprobs) == 0:
        raise ValueError("cannot score an empty patch")
    return math.fsum(token_logprobs) / len(token_logprobs)


class NgramCounts:
    """history tuple -> Counter of next tokens, for orders 1..k."""

    def __init__(self, order: int):
        self.order = order
        self.tables: list[dict[tuple[str, ...], Counter]] = [defaultdict(Counter) for _ in range(order)]
        self.vocab: set[str] = set()

    def add(self, stream: Sequence[str], start: int = 0, min_order: int = 1, keep=None) -> None:
        """Count n-grams whose predicted token sits at a position >= ``start``."""
        for pos in range(start, len(stream)):
            tok = stream[pos]
            for j in range(min_order, self.order + 1):
                if pos - j + 1 < 0:
                    break
                hist = tuple(stream[pos - j + 1 : pos])
                if keep is not None and not keep(hist, tok):
                    continue
                self.tables[j - 1][hist][tok] += 1
                self.vocab.add(tok)

    def merge(self, other: "NgramCounts") -> None:
        for mine, theirs in zip(self.tables, other.tables):
            for hist, ctr in theirs.items():
                mine[hist].update(ctr)
        self.vocab |= other.vocab

    def lookup(self, j: int, hist: tuple[str, ...]) -> Counter | None:
        return self.tables[j - 1].get(hist)


def training_streams(sample: MaskedSample, order: int = DEFAULT_ORDER) -> list[tuple[list[str], int]]:
    """(stream, start) pairs: left context, span target, and the token after it."""
    full = sample.reconstruct()
    # code positions of each span in the reconstructed token list
    spans, pos = [], 0
    fills = dict(sample.targets)
    for item in sample.masked_input:
        if isinstance(item, str):
            pos += 1
        else:
            spans.append((pos, pos + len(fills[item])))
            pos += len(fills[item])
    code_index = []
    code = []
    for i, t in enumerate(full):
        if is_code_text(t):
            code_index.append(i)
            code.append(t)
    out = []
    for a, b in spans:
        ca = bisect_left(code_index, a)
        cb = bisect_left(code_index, b)
        lo = max(0, ca - (order - 1))
        hi = min(len(code), cb + 1)
        stream = code[lo:hi]
        if cb >= len(code):
            stream = stream + [EOF_TOKEN]
        out.append((stream, ca - lo))
    return out


class ReferenceModel:
    def __init__(self, order: int = DEFAULT_ORDER, alpha: float = DEFAULT_ALPHA):
        if order < 1:
            raise ValueError("order must be positive")
        self.order = order
        self.alpha = alpha
        self.counts = NgramCounts(order)

    @property
    def vocab(self) -> set[str]:
        return self.counts.vocab

    def train(self, dataset: Iterable[MaskedSample]) -> "ReferenceModel":
        for sample in dataset:
            for stream, start in training_streams(sample, self.order):
                self.counts.add(stream, start)
        return self

    def distribution(
        self,
        history: Sequence[str],
        vocab: Sequence[str],
        index: dict[str, int],
        overlay: NgramCounts | None = None,
        memo: dict | None = None,
    ) -> np.ndarray:
        """P(next | history) over ``vocab``; sums to one.

        ``memo`` caches lower-order vectors by history suffix; it is only valid
        for one (vocab, overlay) pair.
        """
        history = tuple(history)
        top = min(self.order, len(history) + 1)
        suffix = lambda j: history[len(history) - (j - 1) :] if j > 1 else ()
        pseudo = self.alpha * len(vocab)
        p, first = None, 1
        if memo is not None:
            for j in range(top - 1, 0, -1):
                hit = memo.get(suffix(j))
                if hit is not None:
                    p, first = hit, j + 1
                    break
        if p is None:
            p = np.full(len(vocab), 1.0 / len(vocab))
        for j in range(first, top + 1):
            hist = suffix(j)
            tables = [c for c in (self.counts.lookup(j, hist), overlay.lookup(j, hist) if overlay else None) if c]
            if tables:
                vec = np.zeros(len(vocab))
                total = 0
                for ctr in tables:
                    for tok, c in ctr.items():
                        vec[index[tok]] += c
                        total += c
                p = (vec + pseudo * p) / (total + pseudo)
            if memo is not None and j < self.order:
                memo[hist] = p
        return p

    def prob(self, token: str, history: Sequence[str] = (), extra_vocab: Iterable[str] = ()) -> float:
        vocab = sorted(self.vocab | set(extra_vocab) | {token})
        index = {t: i for i, t in enumerate(vocab)}
        return float(self.distribution(history, vocab, index)[index[token]])

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path, metadata: dict | None = None) -> None:
        tables = []
        for j, table in enumerate(self.counts.tables, start=1):
            for hist in sorted(table):
                ctr = table[hist]
                tables.append([j, list(hist), sorted(ctr.items())])
        body = {
            "order": self.order,
            "alpha": self.alpha,
            "metadata": metadata or {},
            "vocab": sorted(self.vocab),
            "tables": tables,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(SNAPSHOT_HEADER + "\n")
            json.dump(body, fh, ensure_ascii=False, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "ReferenceModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != SNAPSHOT_HEADER:
                raise ModelError(f"{path}: unsupported snapshot header {header!r}")
            body = json.load(fh)
        model = cls(body["order"], body["alpha"])
        for j, hist, items in body["tables"]:
            model.counts.tables[j - 1][tuple(hist)].update(dict(items))
        model.counts.vocab.update(body["vocab"])
        return model

    @staticmethod
    def snapshot_metadata(path: str | Path) -> dict:
        with open(path, encoding="utf-8") as fh:
            if fh.readline().rstrip("\n") != SNAPSHOT_HEADER:
                raise ModelError(f"{path}: unsupported snapshot header")
            return json.load(fh).get("metadata", {})


@dataclass
class PredictorHandle:
    variant: str
    backend: str = REFERENCE
    model: ReferenceModel | None = None
    client: object | None = None  # remote.RemoteClient
    context_limit: int = DEFAULT_CONTEXT_LIMIT
    top_p: float = 1.0
    temperature: float = 1.0
    prompt_weight: float = DEFAULT_PROMPT_WEIGHT
    max_span_len: int = DEFAULT_MAX_SPAN

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.context_limit <= 0:
            raise ValueError("context_limit must be positive")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.backend == REFERENCE and self.model is None:
            self.model = ReferenceModel()
        if self.backend == REMOTE and self.client is None:
            raise ValueError("remote backend needs a client")


def prompt_identifier_tokens(prompt: Prompt) -> list[str]:
    return [r.name for r in prompt.identifiers]


def prompt_code_tokens(prompt: Prompt) -> list[str]:
    inner = prompt.text[2:-2] if prompt.text.startswith("/*") else prompt.text
    return [t.text for t in code_tokens(tokenize(inner))]


def prompt_token_count(prompt: Prompt | None) -> int:
    return 0 if prompt is None else len(prompt_code_tokens(prompt)) + 2


def context_overlay(inp: MaskedRepairInput, order: int, prompt: Prompt | None = None) -> NgramCounts:
    """Counts from the visible window, plus the prompt's identifier n-grams."""
    overlay = NgramCounts(order)
    overlay.add(list(inp.left))
    overlay.add(list(inp.right))
    if prompt is not None:
        names = set(prompt_identifier_tokens(prompt))
        for r in prompt.identifiers:
            rendered = [t.text for t in code_tokens(tokenize(r.render()))]
            overlay.add(rendered, min_order=2, keep=lambda h, t: t in names or (h and h[-1] in names))
    return overlay


class _Sampler:
    """Per-call distribution cache over a fixed vocabulary."""

    def __init__(self, handle: PredictorHandle, inp: MaskedRepairInput, prompt: Prompt | None):
        model = handle.model
        self.handle = handle
        self.model = model
        self.overlay = context_overlay(inp, model.order, prompt)
        right = inp.right
        self.stop_token = right[0] if right else EOF_TOKEN
        names = prompt_identifier_tokens(prompt) if prompt else []
        vocab = sorted(model.vocab | self.overlay.vocab | {self.stop_token} | set(names))
        self.vocab = vocab
        self.index = {t: i for i, t in enumerate(vocab)}
        self.stop_index = self.index[self.stop_token]
        self.prompt_idx = sorted({self.index[n] for n in names})
        self.cache: dict[tuple[str, ...], tuple[np.ndarray, np.ndarray]] = {}
        self.memo: dict[tuple[str, ...], np.ndarray] = {}

    def final(self, history: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
        key = history[len(history) - (self.model.order - 1) :] if self.model.order > 1 else ()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        p = self.model.distribution(key, self.vocab, self.index, self.overlay, self.memo)
        p = interpolate_prompt(p, self.prompt_idx, self.handle.prompt_weight)
        p = nucleus(p, self.handle.top_p, self.handle.temperature)
        with np.errstate(divide="ignore"):
            logp = np.log(p)
        hit = (np.cumsum(p), logp)
        self.cache[key] = hit
        return hit


def interpolate_prompt(p: np.ndarray, prompt_idx: Sequence[int], weight: float) -> np.ndarray:
    """Mix in a uniform distribution over the prompt identifiers."""
    if not len(prompt_idx) or weight <= 0:
        return p
    u = np.zeros_like(p)
    u[list(prompt_idx)] = 1.0 / len(prompt_idx)
    return (1.0 - weight) * p + weight * u


def nucleus(p: np.ndarray, top_p: float = 1.0, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scale, then keep the smallest top set with mass >= top_p."""
    if temperature != 1.0:
        with np.errstate(divide="ignore"):
            logits = np.log(p) / temperature
        logits -= logits.max()
        p = np.exp(logits)
        p /= p.sum()
    if top_p >= 1.0:
        return p
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(p[order])
    keep = int(np.searchsorted(cum, top_p - 1e-12) + 1)
    out = np.zeros_like(p)
    out[order[:keep]] = p[order[:keep]]
    return out / out.sum()


def _sample_reference(
    handle: PredictorHandle, inp: MaskedRepairInput, prompt: Prompt | None, n: int, seed: int
) -> list[SpanSample]:
    sampler = _Sampler(handle, inp, prompt)
    rng = np.random.default_rng(seed)
    left = tuple(inp.left)
    out = []
    for _ in range(n):
        history = left
        toks: list[str] = []
        lps: list[float] = []
        depth = 0
        dipped = False  # a closer without its opener makes the fill unbalanced
        terminated = False
        for _step in range(handle.max_span_len):
            cum, logp = sampler.final(history)
            idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            idx = min(idx, len(cum) - 1)
            if idx == sampler.stop_index and toks and depth == 0 and not dipped:
                toks.append(END_TOKEN)
                lps.append(float(logp[idx]))
                terminated = True
                break
            tok = sampler.vocab[idx]
            if tok == EOF_TOKEN:
                continue
            toks.append(tok)
            lps.append(float(logp[idx]))
            if tok in _OPEN:
                depth += 1
            elif tok in _CLOSE:
                depth -= 1
                dipped = dipped or depth < 0
            history = history + (tok,)
        out.append(SpanSample(tuple(toks), tuple(lps), terminated))
    return out


def sample_span(
    handle: PredictorHandle,
    inp: MaskedRepairInput,
    prompt: Prompt | None = None,
    n: int = 1,
    seed: int = 0,
) -> list[SpanSample]:
    if n < 1:
        raise ValueError("n must be at least 1")
    if inp.token_count() + prompt_token_count(prompt) > handle.context_limit:
        raise ModelError(
            f"input of {inp.token_count()} tokens (+ prompt) exceeds context limit {handle.context_limit}"
        )
    if handle.backend == REMOTE:
        return handle.client.infill(handle, inp, prompt, n, seed)
    return _sample_reference(handle, inp, prompt, n, seed)


def identifier_probability(handle: PredictorHandle, inp: MaskedRepairInput, name: str, prompt: Prompt | None = None) -> float:
    """Probability of ``name`` as the first token of the span."""
    sampler = _Sampler(handle, inp, prompt)
    if name not in sampler.index:
        return 0.0
    cum, _ = sampler.final(tuple(inp.left))
    p = np.diff(np.concatenate(([0.0], cum)))
    return float(p[sampler.index[name]])


__all__ = [
    "BASE",
    "KI",
    "RO",
    "PROMPTED",
    "VARIANTS",
    "END_TOKEN",
    "PredictorHandle",
    "ReferenceModel",
    "SpanSample",
    "sample_span",
    "score_patch",
]
