"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 2 configuration error, 3 missing or mismatched stage
input, 4 repair timed out.
"""
from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import tempfile
import threading
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import ALL_VARIANTS, ConfigError, RunConfig, load_bug, resolve_with_file
from .corpus import IngestError, ingest, load_corpus, save_corpus
from .masking import (
    DatasetError,
    KI as KI_STRATEGY,
    MaskingConfig,
    build_ki_dataset,
    build_ro_dataset,
    read_dataset,
    read_metadata,
    write_dataset,
)
from .model import BASE, KI, REMOTE, RO, ModelError, ReferenceModel
from .remote import RemoteClient, TransportError
from .repair import REPORT_FORMAT, RepairBudget, prepare_handles, run_bug, summarize
from .retrieval import RetrievalError, retrieve
from .validation import ConfigurationError, checkout

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_TIMEOUT = 0, 2, 3, 4

log = logging.getLogger("clozefix")


class StageInputError(Exception):
    """A required artifact from an earlier stage is missing or of the wrong kind."""


# -- helpers ---------------------------------------------------------------


def _need(path: str | Path | None, what: str, hint: str) -> Path:
    if path is None:
        raise StageInputError(f"no {what} given; {hint}")
    p = Path(path)
    if not p.exists():
        raise StageInputError(f"{what} {p} not found; {hint}")
    return p


def _flags(args: argparse.Namespace) -> dict:
    """RunConfig overrides taken from the command line (unset flags are None)."""
    names = {
        "mask_rate": "mask_rate",
        "iterations": "iterations",
        "strategy": "strategy",
        "top_n": "top_n",
        "scope": "scope",
        "samples": "samples",
        "validate_top": "validate_top",
        "seed": "seed",
        "backend": "backend",
        "remote_url": "remote_url",
        "time_limit": "time_limit",
        "stop": "stop",
        "workers": "workers",
    }
    out = {field: getattr(args, attr, None) for field, attr in names.items()}
    if getattr(args, "variants", None):
        out["variants"] = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    return out


def _config(args: argparse.Namespace) -> RunConfig:
    return resolve_with_file(getattr(args, "config", None), _flags(args))


def _emit(obj: dict, out: str | None, pretty_text: str | None = None) -> None:
    text = pretty_text if pretty_text is not None else json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[str(h) for h in header]] + [["-" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _masking(cfg: RunConfig) -> MaskingConfig:
    return MaskingConfig(cfg.mask_rate, cfg.iterations, cfg.mean_span_len, cfg.seed)


def _corpus(args: argparse.Namespace):
    path = _need(args.corpus, "corpus cache", "run `clozefix ingest --project DIR --out CORPUS` first")
    try:
        return load_corpus(path)
    except (IngestError, ValueError, KeyError) as exc:
        raise StageInputError(f"{path} is not a corpus cache ({exc}); run `clozefix ingest` to create one") from exc


# -- subcommands -----------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config(args)
    project = args.project
    include, exclude = args.include, args.exclude
    if args.bug:
        spec = load_bug(args.bug)
        project = project or spec.project_root
        include = include or list(spec.include)
        exclude = exclude or list(spec.exclude)
    if project is None:
        raise ConfigError("ingest needs --project or --bug")
    include = include or ["**/*.java"]
    exclude = exclude or ["**/test/**"]
    corpus = ingest(project, include, exclude)
    header = {"include": list(include), "exclude": list(exclude), "run": cfg.to_dict(), "version": __version__}
    save_corpus(corpus, args.out, header)
    summary = {"files": len(corpus.files), "functions": len(corpus.functions), "warnings": list(corpus.warnings),
               "out": str(args.out)}
    _emit(summary, None, f"{summary['files']} files, {summary['functions']} functions -> {args.out}\n" if args.pretty else None)
    return EXIT_OK


def _build(args: argparse.Namespace, ki: bool) -> int:
    cfg = _config(args)
    corpus = _corpus(args)
    mcfg = _masking(cfg)
    try:
        samples = build_ki_dataset(corpus, mcfg) if ki else build_ro_dataset(corpus, cfg.strategy, mcfg)
    except DatasetError as exc:
        raise StageInputError(str(exc)) from exc
    strategy = KI_STRATEGY if ki else samples[0].strategy if samples else cfg.strategy
    meta = {
        "strategy": strategy,
        "mask_rate": cfg.mask_rate,
        "iterations": cfg.iterations,
        "mean_span_len": cfg.mean_span_len,
        "seed": cfg.seed,
        "samples": len(samples),
        "corpus": str(args.corpus),
        "run": cfg.to_dict(),
    }
    write_dataset(samples, args.out, meta)
    _emit({"out": str(args.out), **{k: v for k, v in meta.items() if k != "run"}}, None,
          f"{len(samples)} {strategy} samples -> {args.out}\n" if args.pretty else None)
    return EXIT_OK


def cmd_build_ki(args: argparse.Namespace) -> int:
    return _build(args, ki=True)


def cmd_build_ro(args: argparse.Namespace) -> int:
    return _build(args, ki=False)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(args)
    model = ReferenceModel(args.order or cfg.order, args.alpha or cfg.alpha)
    sources = []
    for d in args.dataset:
        path = _need(d, "dataset", "build one with `clozefix build-ki` or `clozefix build-ro` first")
        try:
            data = read_dataset(path)
        except (DatasetError, UnicodeDecodeError) as exc:
            raise StageInputError(f"{exc}; expected a file written by build-ki/build-ro") from exc
        model.train(data)
        sources.append({"path": str(path), "samples": len(data), **read_metadata(path)})
    meta = {"datasets": sources, "order": model.order, "alpha": model.alpha, "version": __version__}
    model.save(args.out, meta)
    _emit({"out": str(args.out), "vocab": len(model.vocab), "datasets": len(sources)}, None,
          f"model over {len(model.vocab)} tokens -> {args.out}\n" if args.pretty else None)
    return EXIT_OK


def cmd_retrieve(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.bug:
        spec = load_bug(args.bug)
        with tempfile.TemporaryDirectory(prefix="clozefix-") as tmp:
            if spec.plant_line is not None:
                spec = checkout(spec, Path(tmp) / "project")
            corpus = ingest(spec.project_root, spec.include, spec.exclude)
            file, line = spec.file, spec.buggy_line_no
            cutoff = spec.frequent_cutoff if spec.frequent_cutoff is not None else cfg.frequent_cutoff
            ranked, prompts = retrieve(corpus, file, line, cfg.top_n, cfg.scope, cfg.combined_prompt, cfg.with_types, cutoff)
    else:
        if args.file is None or args.line is None:
            raise ConfigError("retrieve needs --bug, or --corpus with --file and --line")
        corpus = _corpus(args)
        file, line = args.file, args.line
        ranked, prompts = retrieve(corpus, file, line, cfg.top_n, cfg.scope, cfg.combined_prompt, cfg.with_types,
                                   cfg.frequent_cutoff)
    rows = [
        {"rank": r.rank, "name": r.name, "kind": r.kind, "type": r.type_info, "similarity": r.similarity,
         "donor": f"{r.donor[0]}:{r.donor[1]}"}
        for r in ranked
    ]
    out = {"file": file, "line": line, "identifiers": rows, "prompts": [p.text for p in prompts], "config": cfg.to_dict()}
    pretty = None
    if args.pretty:
        pretty = _table(("rank", "name", "kind", "type", "similarity", "donor"),
                        [(r["rank"], r["name"], r["kind"], r["type"], f"{r['similarity']:.3f}", r["donor"]) for r in rows])
        pretty += "".join(p.text + "\n" for p in prompts)
    _emit(out, args.out, pretty)
    return EXIT_OK


def _load_models(args: argparse.Namespace) -> dict[str, ReferenceModel]:
    models = {}
    for variant, attr in ((BASE, "base_model"), (KI, "ki_model"), (RO, "ro_model")):
        path = getattr(args, attr, None)
        if path is None:
            continue
        p = _need(path, f"{variant} model", "train one with `clozefix train`")
        try:
            models[variant] = ReferenceModel.load(p)
        except (ModelError, ValueError, KeyError) as exc:
            raise StageInputError(f"{p}: {exc}; expected a snapshot written by `clozefix train`") from exc
    return models


def cmd_repair(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.bug is None:
        raise ConfigError("repair needs --bug")
    spec = load_bug(args.bug)
    if args.project:
        spec = replace(spec, project_root=Path(args.project).resolve())
        spec.source()
    client = None
    if any(cfg.backend_for(v) == REMOTE for v in cfg.variants):
        if not cfg.remote_url:
            raise ConfigError("backend 'remote' needs --remote-url (or remote_url in the config)")
        client = RemoteClient(cfg.remote_url)
    models = _load_models(args)

    stop = threading.Event()
    previous = None
    if threading.current_thread() is threading.main_thread():
        # first Ctrl-C finishes the current round and writes a partial report
        previous = signal.signal(signal.SIGINT, lambda *_: stop.set())
    try:
        with tempfile.TemporaryDirectory(prefix="clozefix-") as tmp:
            # always work on a copy so builds never touch the user's tree
            spec = checkout(spec, Path(tmp) / "project")
            corpus = ingest(spec.project_root, spec.include, spec.exclude)
            handles = prepare_handles(corpus, cfg, models, client)
            report = run_bug(spec, RepairBudget(cfg.samples, cfg.validate_top), handles, corpus, cfg,
                             stop_event=stop, pool_base=tmp)
    finally:
        if previous is not None:
            signal.signal(signal.SIGINT, previous)

    if args.out:
        report.write(args.out)
    if args.pretty:
        sys.stdout.write(_repair_table(report.data))
    elif not args.out:
        sys.stdout.write(report.dumps())
    return EXIT_TIMEOUT if report.timed_out else EXIT_OK


def _repair_table(data: dict) -> str:
    rows = [
        (v, vr["sampled"], vr["unique"], vr["validated"], vr["compile_error"], vr["test_fail"], vr["plausible"],
         data["correct_ranks"].get(v))
        for v, vr in data["variants"].items()
    ]
    head = f"bug {data['bug_id']}  min rank {data['min_rank']}  stop {data['stop']['reason']}\n"
    return head + _table(("variant", "sampled", "unique", "validated", "compile_err", "test_fail", "plausible",
                          "correct_rank"), rows)


def cmd_report(args: argparse.Namespace) -> int:
    reports = []
    for r in args.reports:
        p = _need(r, "repair report", "produce one with `clozefix repair --out REPORT`")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise StageInputError(f"{p} is not a repair report ({exc})") from exc
        if not isinstance(data, dict) or data.get("format") != REPORT_FORMAT:
            raise StageInputError(f"{p} is not a repair report (format {REPORT_FORMAT!r} expected)")
        reports.append(data)
    summary = summarize(reports)
    summary["reports"] = [str(r) for r in args.reports]
    pretty = None
    if args.pretty:
        rows = [
            (r["bug_id"], "yes" if r["plausible"] else "no", ",".join(r["plausible_variants"]), r["min_rank"],
             r["validated"], None if r["compile_error_pct"] is None else f"{r['compile_error_pct']:.1f}",
             r["unique_compilable"])
            for r in summary["rows"]
        ]
        pretty = _table(("bug", "plausible", "variants", "min_rank", "validated", "compile_err_%", "unique_compilable"), rows)
        per = ", ".join(f"{v} {n}" for v, n in summary["plausible_per_variant"].items())
        pretty += summary["plausible_line"] + (f"  ({per})" if per else "") + "\n"
    _emit(summary, args.out, pretty)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run config file (TOML); flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--pretty", action="store_true", help="human-readable tables instead of JSON")


def _masking_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mask-rate", type=float)
    p.add_argument("--iterations", type=int)


def _retrieval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--top-n", type=int)
    p.add_argument("--scope", choices=("file", "project"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clozefix", description="Cloze-style program repair toolkit.")
    ap.add_argument("--version", action="version", version=f"clozefix {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tokenize a project into a corpus cache")
    _common(p)
    p.add_argument("--project")
    p.add_argument("--bug", help="take project root and globs from a bug config")
    p.add_argument("--include", action="append")
    p.add_argument("--exclude", action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    for name, func, helptext in (
        ("build-ki", cmd_build_ki, "knowledge-intensified span-masking dataset"),
        ("build-ro", cmd_build_ro, "repair-oriented template-masking dataset"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        _masking_flags(p)
        if name == "build-ro":
            p.add_argument("--strategy", choices=("template", "ast", "line"))
        p.add_argument("--corpus", required=True)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("train", help="fit the reference model on dataset files")
    _common(p)
    p.add_argument("--dataset", action="append", required=True)
    p.add_argument("--order", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("retrieve", help="rank relevant identifiers for a buggy line")
    _common(p)
    _retrieval_flags(p)
    p.add_argument("--bug")
    p.add_argument("--corpus")
    p.add_argument("--file")
    p.add_argument("--line", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("repair", help="generate, rank and validate patches for one bug")
    _common(p)
    _masking_flags(p)
    _retrieval_flags(p)
    p.add_argument("--bug")
    p.add_argument("--project", help="override the bug's project root")
    p.add_argument("--strategy", choices=("template", "ast", "line"))
    p.add_argument("--samples", type=int)
    p.add_argument("--validate-top", type=int)
    p.add_argument("--backend", choices=("reference", "remote"))
    p.add_argument("--remote-url")
    p.add_argument("--time-limit", type=float)
    p.add_argument("--stop", choices=("none", "first_plausible", "first_correct"))
    p.add_argument("--workers", type=int)
    p.add_argument("--variants", help=f"comma-separated subset of {','.join(ALL_VARIANTS)}")
    p.add_argument("--base-model")
    p.add_argument("--ki-model")
    p.add_argument("--ro-model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("report", help="aggregate repair reports into a summary table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, RetrievalError) as exc:
        print(f"clozefix: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageInputError, IngestError, TransportError) as exc:
        print(f"clozefix: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
