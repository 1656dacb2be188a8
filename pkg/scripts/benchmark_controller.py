"""Wall time of one controller step (assemble + solve) over repeated Scenario 2 runs."""

import argparse
from pathlib import Path

import numpy as np

from lanecoord.config import load_scenario
from lanecoord.simulator import run

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(ROOT / "scenarios" / "scenario2.json"))
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sc = load_scenario(args.config)
    times = []
    for _ in range(args.repeats):
        times.extend(run(sc).wall_times)
    ms = np.asarray(times) * 1e3
    print(f"{sc.name}: {len(ms)} controller steps")
    print(f"mean {ms.mean():.3f} ms  median {np.median(ms):.3f} ms  p99 {np.percentile(ms, 99):.3f} ms  max {ms.max():.3f} ms")
    print(f"reference figure for the original implementation: 96 ms mean")


if __name__ == "__main__":
    main()
