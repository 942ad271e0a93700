"""End-to-end repair of one bug: generate, dedupe, rank, validate, merge ranks."""
from __future__ import annotations

import json
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .corpus import ProjectCorpus, SourceFile
from .lexer import join_tokens, keywords_for
from .masking import MaskingConfig, build_ki_dataset, build_ro_dataset
from .model import (
    BASE,
    KI,
    PROMPTED,
    REMOTE,
    RO,
    PredictorHandle,
    ReferenceModel,
    prompt_token_count,
    sample_span,
    score_patch,
)
from .retrieval import Prompt, RetrievalError, normalize, retrieve
from .templates import ContextOverflow, LineContext, MaskedRepairInput, RepairTemplate, apply, enumerate_applicable, splice
from .validation import COMPILE_ERROR, PLAUSIBLE, TEST_FAIL, BugSpec, ValidationOutcome, WorkdirPool

REPORT_FORMAT = "clozefix-repair-report 1"
VARIANT_ORDER = (BASE, KI, RO, PROMPTED)


@dataclass(frozen=True)
class RepairBudget:
    samples_per_model: int = 5000
    validate_top_unique: int = 1000

    def __post_init__(self):
        if self.samples_per_model < 1 or self.validate_top_unique < 1:
            raise ValueError("budget values must be positive")


@dataclass(frozen=True)
class CandidatePatch:
    fill_text: str
    template_id: str
    variant: str
    score: float
    rank_in_variant: int
    patched_line_text: str
    patched_lines: tuple[str, ...] = ()
    token_count: int = 0
    prompt_rank: int | None = None


def rank_key(p: CandidatePatch) -> tuple:
    return (-p.score, p.fill_text, p.template_id, p.patched_line_text)


def rank_patches(patches: Sequence[CandidatePatch]) -> list[CandidatePatch]:
    """Highest score first; ties by fill text, then template id, then patched line."""
    return sorted(patches, key=rank_key)


def merge_min_rank(per_variant_ranks: Mapping[str, int]) -> int | None:
    return min(per_variant_ranks.values()) if per_variant_ranks else None


def dedupe(patches: Sequence[CandidatePatch]) -> tuple[list[CandidatePatch], int]:
    """Keep the best-scored patch per (template, fill), then per patched line.

    Returns the survivors and how many cross-template line duplicates the second
    pass removed.
    """
    by_fill: dict[tuple[str, str], CandidatePatch] = {}
    for p in patches:
        key = (p.template_id, p.fill_text)
        if key not in by_fill or rank_key(p) < rank_key(by_fill[key]):
            by_fill[key] = p
    by_line: dict[str, CandidatePatch] = {}
    for p in by_fill.values():
        if p.patched_line_text not in by_line or rank_key(p) < rank_key(by_line[p.patched_line_text]):
            by_line[p.patched_line_text] = p
    return list(by_line.values()), len(by_fill) - len(by_line)


def is_correct(patched_lines: Sequence[str], expected: str | None) -> bool:
    if expected is None:
        return False
    return normalize(" ".join(patched_lines)) == normalize(" ".join(expected.splitlines()))


def stream_seed(seed: int, *parts: str | int) -> int:
    words = [seed & 0xFFFFFFFF] + [zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def line_context(source: SourceFile, line_no: int) -> LineContext:
    before = tuple(t.text for t in source.tokens if t.is_code and t.line < line_no)
    after = tuple(t.text for t in source.tokens if t.is_code and t.line > line_no)
    return LineContext(before, after)


def template_inputs(
    source: SourceFile, line_no: int, limit: int, reserved: int = 0
) -> tuple[list[tuple[RepairTemplate, MaskedRepairInput]], list[str]]:
    kw = keywords_for(source.relative_path)
    line = source.line(line_no)
    ctx = line_context(source, line_no)
    out, skipped = [], []
    for t in enumerate_applicable(line, kw):
        try:
            out.append((t, apply(t, line, ctx, buggy_line_no=line_no, limit=limit, reserved=reserved, keywords=kw)))
        except ContextOverflow:
            skipped.append(t.id)
    return out, skipped


@dataclass
class Job:
    template: RepairTemplate
    input: MaskedRepairInput
    prompt: Prompt | None = None
    prompt_rank: int | None = None


def split_evenly(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


@dataclass
class VariantResult:
    variant: str
    sampled: int = 0
    terminated: int = 0
    unique: int = 0
    identity_dropped: int = 0
    line_duplicates: int = 0
    ranked: list[CandidatePatch] = field(default_factory=list)
    seconds: float = 0.0


def generate(
    handle: PredictorHandle,
    jobs: Sequence[Job],
    samples: int,
    validate_top: int,
    seed: int,
    source: SourceFile,
    line_no: int,
) -> VariantResult:
    started = time.perf_counter()
    res = VariantResult(handle.variant)
    kw = keywords_for(source.relative_path)
    original = source.line(line_no)
    raw: list[CandidatePatch] = []
    for job, n in zip(jobs, split_evenly(samples, max(1, len(jobs)))):
        if n == 0:
            continue
        s = stream_seed(seed, handle.variant, job.template.id, job.prompt_rank or 0)
        for sample in sample_span(handle, job.input, job.prompt, n, s):
            res.sampled += 1
            if not sample.terminated or not sample.fill_tokens:
                continue
            res.terminated += 1
            fill = join_tokens(sample.fill_tokens)
            lines = tuple(splice(fill, job.template, original, kw))
            if lines == (original,):
                res.identity_dropped += 1
                continue
            raw.append(
                CandidatePatch(
                    fill_text=fill,
                    template_id=job.template.id,
                    variant=handle.variant,
                    score=score_patch(sample.token_logprobs),
                    rank_in_variant=0,
                    patched_line_text="\n".join(lines),
                    patched_lines=lines,
                    token_count=len(sample.token_logprobs),
                    prompt_rank=job.prompt_rank,
                )
            )
    unique, res.line_duplicates = dedupe(raw)
    res.unique = len(unique)
    top = rank_patches(unique)[:validate_top]
    res.ranked = [
        CandidatePatch(**{**p.__dict__, "rank_in_variant": i}) for i, p in enumerate(top, start=1)
    ]
    res.seconds = time.perf_counter() - started
    return res


def prepare_handles(
    corpus: ProjectCorpus,
    cfg: RunConfig,
    models: Mapping[str, ReferenceModel | None] | None = None,
    client=None,
) -> dict[str, PredictorHandle]:
    """Handles for the configured variants, training KI/RO models when none are given."""
    models = dict(models or {})
    mcfg = MaskingConfig(cfg.mask_rate, cfg.iterations, cfg.mean_span_len, cfg.seed)
    out = {}
    for v in cfg.variants:
        backend = cfg.backend_for(v)
        model = None
        if backend != REMOTE:
            model = models.get(v)
            if model is None and v == KI:
                model = ReferenceModel(cfg.order, cfg.alpha).train(build_ki_dataset(corpus, mcfg))
            elif model is None and v == RO:
                model = ReferenceModel(cfg.order, cfg.alpha).train(build_ro_dataset(corpus, cfg.strategy, mcfg))
            elif model is None:
                model = models.get(BASE) or ReferenceModel(cfg.order, cfg.alpha)
        out[v] = PredictorHandle(
            variant=v,
            backend=backend,
            model=model,
            client=client if backend == REMOTE else None,
            context_limit=cfg.context_limit,
            top_p=cfg.top_p,
            temperature=cfg.temperature,
            prompt_weight=cfg.prompt_weight,
            max_span_len=cfg.max_span_len,
        )
    return out


def generate_variants(
    handles: Mapping[str, PredictorHandle],
    source: SourceFile,
    line_no: int,
    prompts: Sequence[Prompt],
    budget: RepairBudget,
    cfg: RunConfig,
    deadline: float = float("inf"),
) -> tuple[dict[str, VariantResult], dict[str, list[str]], bool]:
    """Sample, dedupe and rank patches for each variant in turn."""
    results: dict[str, VariantResult] = {}
    skipped_templates: dict[str, list[str]] = {}
    for v in [v for v in VARIANT_ORDER if v in handles]:
        if time.perf_counter() > deadline:
            return results, skipped_templates, True
        if v == PROMPTED:
            jobs = []
            for rank, prompt in enumerate(prompts, start=1):
                inputs, skipped = template_inputs(source, line_no, cfg.context_limit, prompt_token_count(prompt))
                skipped_templates.setdefault(v, []).extend(skipped)
                jobs.extend(Job(tp, inp, prompt, rank) for tp, inp in inputs)
        else:
            inputs, skipped = template_inputs(source, line_no, cfg.context_limit)
            skipped_templates[v] = skipped
            jobs = [Job(tp, inp) for tp, inp in inputs]
        results[v] = generate(handles[v], jobs, budget.samples_per_model, budget.validate_top_unique, cfg.seed, source, line_no)
    return results, skipped_templates, False


def correct_ranks(spec: BugSpec, handles: Mapping[str, PredictorHandle], corpus: ProjectCorpus, cfg: RunConfig) -> dict[str, int | None]:
    """Rank of the developer fix in each variant's ranked list, without running any tests.

    ``None`` means the fix was not among the ``validate_top`` ranked patches.
    """
    source = corpus.file(spec.file)
    cutoff = spec.frequent_cutoff if spec.frequent_cutoff is not None else cfg.frequent_cutoff
    try:
        _, prompts = retrieve(corpus, spec.file, spec.buggy_line_no, cfg.top_n, cfg.scope, cfg.combined_prompt,
                              cfg.with_types, cutoff)
    except RetrievalError:
        prompts = []
    results, _, _ = generate_variants(handles, source, spec.buggy_line_no, prompts,
                                      RepairBudget(cfg.samples, cfg.validate_top), cfg)
    out: dict[str, int | None] = {v: None for v in handles}
    for v, res in results.items():
        out[v] = next((p.rank_in_variant for p in res.ranked if is_correct(p.patched_lines, spec.expected_fix)), None)
    return out


@dataclass
class RepairReport:
    data: dict
    timing: dict

    @property
    def timed_out(self) -> bool:
        return bool(self.data["timed_out"])

    def dumps(self) -> str:
        return json.dumps(self.data, indent=1, sort_keys=True, ensure_ascii=False) + "\n"

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")
        timing_path(path).write_text(json.dumps(self.timing, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def timing_path(report_path: str | Path) -> Path:
    p = Path(report_path)
    return p.with_name(p.name + ".timing.json")


def _patch_row(p: CandidatePatch, outcome: ValidationOutcome | None, expected: str | None) -> dict:
    return {
        "rank": p.rank_in_variant,
        "template": p.template_id,
        "fill": p.fill_text,
        "score": p.score,
        "tokens": p.token_count,
        "patched_line": p.patched_line_text,
        "prompt_rank": p.prompt_rank,
        "classification": outcome.classification if outcome else None,
        "exit_code": outcome.exit_code if outcome else None,
        "timed_out": outcome.timed_out if outcome else None,
        "correct": is_correct(p.patched_lines, expected) if expected is not None else None,
    }


def run_bug(
    spec: BugSpec,
    budget: RepairBudget,
    handles: Mapping[str, PredictorHandle],
    corpus: ProjectCorpus,
    cfg: RunConfig,
    *,
    stop_event: threading.Event | None = None,
    pool_base: str | Path | None = None,
) -> RepairReport:
    t0 = time.perf_counter()
    deadline = t0 + min(spec.time_limit, cfg.time_limit)
    timing: dict = {"stages": {}, "validations": []}
    source = corpus.file(spec.file)
    line_no = spec.buggy_line_no
    notes: list[str] = []
    timed_out = False

    # retrieval
    t = time.perf_counter()
    ranked_ids, prompts = [], []
    try:
        ranked_ids, prompts = retrieve(
            corpus, spec.file, line_no, cfg.top_n, cfg.scope, cfg.combined_prompt, cfg.with_types,
            spec.frequent_cutoff if spec.frequent_cutoff is not None else cfg.frequent_cutoff,
        )
    except RetrievalError as exc:
        notes.append(f"retrieval failed: {exc}")
    timing["stages"]["retrieval"] = time.perf_counter() - t

    variants = [v for v in VARIANT_ORDER if v in handles]
    if PROMPTED in variants and not prompts:
        variants.remove(PROMPTED)
        notes.append("no relevant identifiers; prompted variant skipped")

    results, skipped_templates, timed_out = generate_variants(
        {v: handles[v] for v in variants}, source, line_no, prompts, budget, cfg, deadline
    )
    for v, res in results.items():
        timing["stages"][f"generate:{v}"] = res.seconds

    # validation, in round-robin rounds so early stopping is deterministic
    t = time.perf_counter()
    outcomes: dict[tuple[str, int], ValidationOutcome] = {}
    by_lines: dict[tuple[str, ...], ValidationOutcome] = {}
    stop_reason = None
    cursor = {v: 0 for v in results}
    if not timed_out and results:
        with WorkdirPool(spec, cfg.workers, pool_base) as pool:
            while any(cursor[v] < len(results[v].ranked) for v in results):
                if time.perf_counter() > deadline:
                    timed_out = True
                    break
                if stop_event is not None and stop_event.is_set():
                    stop_reason = "operator"
                    break
                batch: list[CandidatePatch] = []
                for v in results:
                    lo = cursor[v]
                    batch.extend(results[v].ranked[lo : lo + cfg.ranks_per_round])
                    cursor[v] = min(len(results[v].ranked), lo + cfg.ranks_per_round)
                fresh = list(dict.fromkeys(p.patched_lines for p in batch if p.patched_lines not in by_lines))
                for lines, outcome in zip(fresh, pool.run_many(fresh)):
                    by_lines[lines] = outcome
                    timing["validations"].append({"patched_line": "\n".join(lines), "seconds": outcome.duration})
                for p in batch:
                    outcomes[(p.variant, p.rank_in_variant)] = by_lines[p.patched_lines]
                if cfg.stop == "first_plausible" and any(by_lines[p.patched_lines].classification == PLAUSIBLE for p in batch):
                    stop_reason = "first_plausible"
                    break
                if cfg.stop == "first_correct" and any(
                    by_lines[p.patched_lines].classification == PLAUSIBLE and is_correct(p.patched_lines, spec.expected_fix)
                    for p in batch
                ):
                    stop_reason = "first_correct"
                    break
    timing["stages"]["validation"] = time.perf_counter() - t

    # report
    expected = spec.expected_fix
    variant_rows, plausible, correct_ranks = {}, [], {}
    for v, res in results.items():
        rows = [_patch_row(p, outcomes.get((v, p.rank_in_variant)), expected) for p in res.ranked]
        validated = [r for r in rows if r["classification"] is not None]
        counts = {c: sum(r["classification"] == c for r in validated) for c in (COMPILE_ERROR, TEST_FAIL, PLAUSIBLE)}
        variant_rows[v] = {
            "sampled": res.sampled,
            "terminated": res.terminated,
            "unique": res.unique,
            "identity_dropped": res.identity_dropped,
            "cross_template_line_duplicates": res.line_duplicates,
            "ranked": len(res.ranked),
            "validated": len(validated),
            **counts,
            "compile_error_pct": (100.0 * counts[COMPILE_ERROR] / len(validated)) if validated else None,
            "skipped_templates": sorted(set(skipped_templates.get(v, []))),
            "patches": rows,
        }
        for p, r in zip(res.ranked, rows):
            if r["classification"] == PLAUSIBLE:
                plausible.append({"variant": v, "rank": p.rank_in_variant, "template": p.template_id,
                                  "fill": p.fill_text, "patched_line": p.patched_line_text, "correct": r["correct"]})
            if r["correct"] and v not in correct_ranks:
                correct_ranks[v] = p.rank_in_variant
    data = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "bug_id": spec.bug_id,
        "bug": {**spec.to_dict(), "project_root": Path(spec.source_root or spec.project_root).name},
        "config": cfg.to_dict(),
        "budget": {"samples_per_model": budget.samples_per_model, "validate_top_unique": budget.validate_top_unique},
        "token_granularity": "lexer tokens",
        "buggy_line": source.line(line_no),
        "retrieval": {
            "identifiers": [
                {"rank": r.rank, "name": r.name, "kind": r.kind, "type": r.type_info, "similarity": r.similarity,
                 "donor": f"{r.donor[0]}:{r.donor[1]}", "ambiguous": r.ambiguous}
                for r in ranked_ids
            ],
            "prompts": [p.text for p in prompts],
        },
        "variants_run": list(results),
        "notes": notes,
        "variants": variant_rows,
        "validated_total": sum(r["validated"] for r in variant_rows.values()),
        "plausible": plausible,
        "correct_ranks": correct_ranks,
        "min_rank": merge_min_rank(correct_ranks),
        "stop": {"mode": cfg.stop, "reason": stop_reason},
        "timed_out": timed_out,
    }
    timing["total"] = time.perf_counter() - t0
    return RepairReport(data, timing)


def summarize(reports: Sequence[dict]) -> dict:
    """Aggregate per-bug reports into one summary table."""
    rows = []
    per_variant: dict[str, int] = {}
    for rep in reports:
        plaus_variants = sorted({p["variant"] for p in rep["plausible"]})
        for v in plaus_variants:
            per_variant[v] = per_variant.get(v, 0) + 1
        compilable = {
            p["patched_line"]
            for vr in rep["variants"].values()
            for p in vr["patches"]
            if p["classification"] in (TEST_FAIL, PLAUSIBLE)
        }
        validated = sum(vr["validated"] for vr in rep["variants"].values())
        comp_err = sum(vr[COMPILE_ERROR] for vr in rep["variants"].values())
        rows.append({
            "bug_id": rep["bug_id"],
            "plausible": bool(rep["plausible"]),
            "plausible_variants": plaus_variants,
            "min_rank": rep["min_rank"],
            "correct_ranks": rep["correct_ranks"],
            "validated": validated,
            "compile_error_pct": (100.0 * comp_err / validated) if validated else None,
            "unique_compilable": len(compilable),
            "timed_out": rep["timed_out"],
        })
    n_plausible = sum(r["plausible"] for r in rows)
    return {
        "bugs": len(rows),
        "plausible": n_plausible,
        "plausible_line": f"plausible {n_plausible}/{len(rows)}",
        "plausible_per_variant": dict(sorted(per_variant.items())),
        "rows": sorted(rows, key=lambda r: r["bug_id"]),
    }
