"""Repair every fixture bug with the full pipeline and print the summary table.

    python3 scripts/run_fixtures.py --out-dir reports --samples 1000 --validate-top 100
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from clozefix.cli import EXIT_OK, EXIT_TIMEOUT, main as cli

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("reports"))
    ap.add_argument("--samples", default="1000")
    ap.add_argument("--validate-top", default="100")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--stop", default="first_correct")
    ap.add_argument("--bugs", nargs="*", help="bug configs (default: all fixture bugs)")
    args = ap.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    bugs = [Path(b) for b in args.bugs] if args.bugs else sorted((ROOT / "fixtures" / "bugs").glob("*.toml"))
    reports = []
    for bug in bugs:
        out = args.out_dir / f"{bug.stem}.json"
        print(f"repairing {bug.stem} ...", file=sys.stderr, flush=True)
        code = cli(["repair", "--bug", str(bug), "--samples", args.samples, "--validate-top", args.validate_top,
                    "--seed", args.seed, "--stop", args.stop, "--out", str(out)])
        if code not in (EXIT_OK, EXIT_TIMEOUT):
            return code
        reports.append(str(out))
    return cli(["report", *reports, "--pretty"])


if __name__ == "__main__":
    sys.exit(main())
