"""Run every shipped scenario through the CLI pipeline and tabulate the reports."""

import argparse
import json
import sys
from pathlib import Path

from lanecoord.cli import cmd_run

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "out"))
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()
    worst = 0
    rows = []
    for cfg in sorted((ROOT / "scenarios").glob("*.json")):
        out = Path(args.out) / cfg.stem
        code = cmd_run(str(cfg), str(out), args.tol)
        worst = max(worst, code)
        rep = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
        rows.append((cfg.stem, code, rep))
    print()
    print(f"{'scenario':12s} {'exit':>4s} {'invariance':>10s} {'min b':>10s} {'where':>14s} {'fallbacks':>9s} {'mean ms':>8s}")
    for name, code, rep in rows:
        if rep is None:
            print(f"{name:12s} {code:4d}")
            continue
        where = f"{rep['min_barrier_vehicle']}/{rep['min_barrier_name']}"
        print(
            f"{name:12s} {code:4d} {rep['invariance']:>10s} {rep['min_barrier']:10.4g} {where:>14s} "
            f"{rep['fallbacks']:9d} {rep['mean_step_ms']:8.3f}"
        )
    return worst


if __name__ == "__main__":
    sys.exit(main())
