"""Switch off the deviations from the frozen-input controller one at a time.

Each row runs a shipped scenario with one ingredient reverted:
  table2-sigma   sigma from the published parameters instead of the refit
  frozen-speed   rows without the sampled speed-change term
  default-gains  tracking gains mu1 = 1, alpha = 0.8
"""

import argparse
import json
import logging
from pathlib import Path

from lanecoord.config import ScenarioConfig, from_dict
from lanecoord.simulator import check_invariance, lyapunov_violations, run

ROOT = Path(__file__).resolve().parents[1]
TABLE2_SIGMA = {"s1": 1.03, "s2": 16.0, "s3": 0.64, "s4": 0.02}


def ablations(base: dict):
    yield "shipped", base
    d = json.loads(json.dumps(base))
    d["controller"]["coordination"]["sigma"] = TABLE2_SIGMA
    yield "table2-sigma", d
    d = json.loads(json.dumps(base))
    d["controller"]["sampled_speed"] = False
    yield "frozen-speed", d
    d = json.loads(json.dumps(base))
    d["controller"]["gains"].update(mu1=1.0, alpha=0.8)
    yield "default-gains", d


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("scenarios", nargs="*", default=["scenario1", "scenario2", "scenario3"])
    args = ap.parse_args()
    logging.disable(logging.WARNING)
    for name in args.scenarios:
        base = json.loads((ROOT / "scenarios" / f"{name}.json").read_text())
        for label, d in ablations(base):
            sc = from_dict(ScenarioConfig, d)
            log = run(sc)
            inv = check_invariance(log)
            rises = sum(len(lyapunov_violations(log, v.name, v.command_time)) for v in sc.vehicles)
            fb = sum(r.fallback for r in log.records)
            err = max(abs(log.final(v.name).y - log.final(v.name).y_ref) for v in sc.vehicles)
            where = f"{inv.worst_vehicle}/{inv.worst_barrier} t={inv.worst_time:.1f}"
            print(f"{name:10s} {label:14s} min b {inv.worst_value:+8.4f} at {where:22s} V-rises {rises:3d} fallbacks {fb:3d} max final |e| {err:.3f}")


if __name__ == "__main__":
    main()
