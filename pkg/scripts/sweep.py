"""Ablation sweep over a parameter grid on the fixture bugs.

Each grid point trains the KI/RO models for every bug and records where the
developer fix lands in each variant's ranking. Ranks come from generation
alone (no tests are run), so a full sweep stays within a few minutes.

    python3 scripts/sweep.py scripts/configs/mask_rate.toml --out sweep.json --csv sweep.csv
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import tempfile
import time
from pathlib import Path

from clozefix.config import RUN_FIELDS, ConfigError, coerce_field, load_bug, load_run_config, read_toml, resolve_run_config
from clozefix.corpus import ingest
from clozefix.repair import VARIANT_ORDER, correct_ranks, merge_min_rank, prepare_handles
from clozefix.validation import checkout

ROOT = Path(__file__).resolve().parent.parent


def grid(path: Path) -> tuple[dict, list[dict], list[Path]]:
    data, _ = read_toml(path)
    sweep = data.get("sweep", {})
    axes = {k: v for k, v in sweep.items() if k != "bugs"}
    for k, values in axes.items():
        if k not in RUN_FIELDS:
            raise ConfigError(f"{path}: [sweep] has unknown field '{k}'")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{path}: [sweep] field '{k}' must be a non-empty list")
    points = [dict(zip(axes, combo)) for combo in itertools.product(*axes.values())]
    for p in points:
        for k, v in p.items():
            p[k] = coerce_field(k, v, f"{path} [sweep]")
    bug_globs = sweep.get("bugs", ["fixtures/bugs/*.toml"])
    bugs = sorted({b for g in bug_globs for b in ROOT.glob(g)})
    return load_run_config(path), points or [{}], bugs


def run_point(base: dict, point: dict, bugs: list[Path]) -> list[dict]:
    cfg = resolve_run_config(base, point)
    rows = []
    with tempfile.TemporaryDirectory(prefix="clozefix-sweep-") as tmp:
        for path in bugs:
            spec = checkout(load_bug(path), Path(tmp) / path.stem)
            corpus = ingest(spec.project_root, spec.include, spec.exclude)
            ranks = correct_ranks(spec, prepare_handles(corpus, cfg), corpus, cfg)
            found = {v: r for v, r in ranks.items() if r is not None}
            rows.append({**point, "bug_id": spec.bug_id, **{v: ranks.get(v) for v in VARIANT_ORDER if v in ranks},
                         "min_rank": merge_min_rank(found)})
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path, help="JSON results (default: stdout)")
    ap.add_argument("--csv", type=Path, help="also write one CSV row per (grid point, bug)")
    args = ap.parse_args(argv)
    try:
        base, points, bugs = grid(args.config)
    except ConfigError as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return 2
    rows = []
    for i, point in enumerate(points, 1):
        t = time.perf_counter()
        got = run_point(base, point, bugs)
        rows.extend(got)
        found = sum(r["min_rank"] is not None for r in got)
        print(f"[{i}/{len(points)}] {point or 'defaults'}: fix ranked for {found}/{len(got)} bugs "
              f"({time.perf_counter() - t:.0f}s)", file=sys.stderr)
    result = {"config": str(args.config), "base": base, "points": points, "rows": rows}
    text = json.dumps(result, indent=1, sort_keys=True) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv:
        fields = list(dict.fromkeys(k for r in rows for k in r))
        with args.csv.open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
