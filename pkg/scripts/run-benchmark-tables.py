#!/usr/bin/env python3
import argparse
import json
import os
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PYTHON_DIR = PROJECT_ROOT / "src-python"
if str(SRC_PYTHON_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_PYTHON_DIR))

from cocktail.bench import (  # noqa: E402
    BenchmarkSpec,
    qualitative_ordering_holds,
    run_benchmark,
)
from cocktail.errors import DesignError  # noqa: E402

# Full table sizes per family (k for x4).
TABLE_LAYOUTS = {
    "x1": (20, 50, 100, 200, 500),
    "x2": (20, 50, 100, 200),
    "x3": (20, 50, 100, 200),
    "x4": (20, 50, 100, 200),
}
DESK_SCALE_LAYOUTS = {
    "x1": (20, 50, 100),
    "x2": (20, 50, 100),
    "x3": (20, 50, 100),
    "x4": (20,),
}


def _print_json(payload: dict):
    print(json.dumps(payload, ensure_ascii=False))


def _stage_callback(stage: str):
    print(f"[STAGE] {stage}", flush=True)


def _parse_args():
    parser = argparse.ArgumentParser(
        description="Reproduce the MA / VEM / cocktail comparison tables for the four builtin design spaces."
    )
    parser.add_argument(
        "--families",
        default="x1,x2,x3,x4",
        help="Comma-separated families to run",
    )
    parser.add_argument("--full", action="store_true", help="Use the full table sizes instead of desk scale")
    parser.add_argument("--algorithms", default="ma,vem,cocktail")
    parser.add_argument("--replications", type=int, default=3)
    parser.add_argument("--epsilon", type=float, default=1e-6)
    parser.add_argument("--seed-base", type=int, default=0)
    parser.add_argument("--budget", type=float, help="Per-cell time budget in seconds")
    parser.add_argument("--workers", type=int, help="Parallel cells (default COCKTAIL_BENCH_WORKERS)")
    parser.add_argument("--out-dir", default="bench-results", help="Directory for CSV and text tables")
    return parser.parse_args()


def main():
    args = _parse_args()
    layouts = TABLE_LAYOUTS if args.full else DESK_SCALE_LAYOUTS
    families = [item.strip().lower() for item in args.families.split(",") if item.strip()]
    algorithms = tuple(item.strip() for item in args.algorithms.split(",") if item.strip())
    os.makedirs(args.out_dir, exist_ok=True)

    summary = {}
    try:
        for family in families:
            if family not in layouts:
                raise DesignError("unknown-family", family)
            spec = BenchmarkSpec(
                family=family,
                sizes=layouts[family],
                algorithms=algorithms,
                replications=args.replications,
                epsilon=args.epsilon,
                seed_base=args.seed_base,
                cell_budget_seconds=args.budget,
            )
            table = run_benchmark(spec, workers=args.workers, stage_callback=_stage_callback)
            print(table.to_text(), end="")
            table.write_csv(os.path.join(args.out_dir, f"{family}.csv"))
            table.write_text(os.path.join(args.out_dir, f"{family}.txt"))
            summary[family] = {
                "cells": len(table.cells),
                "orderingHolds": qualitative_ordering_holds(table),
            }
    except DesignError as e:
        _print_json({"status": "failed", "error": str(e), "detail": e.detail})
        return 1

    _print_json({"status": "success", "outDir": os.path.abspath(args.out_dir), "tables": summary})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
