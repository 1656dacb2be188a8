"""Perturb the initial geometry of Scenario 2 or 3 and report which variants break.

Used to judge how much margin the shipped configurations have; the
failures it finds are discussed in the README's limitations section.
"""

import argparse
import itertools
import json
import logging
from pathlib import Path

from lanecoord.config import ScenarioConfig, from_dict
from lanecoord.simulator import check_invariance, lyapunov_violations, run

ROOT = Path(__file__).resolve().parents[1]


def variants(name: str, base: dict):
    if name == "scenario2":
        for lx, lv, ev in itertools.product([-44, -47, -50, -53, -56], [21, 21.5, 22, 22.5, 23], [19.5, 20, 20.5]):
            d = json.loads(json.dumps(base))
            d["vehicles"][1].update(x=lx, v=lv, v_ref=lv)
            d["vehicles"][0].update(v=ev, v_ref=ev)
            yield f"left x={lx} v={lv} ego v={ev}", d
    else:
        for bx, fx, bv, al in itertools.product([-4, -8, -12], [22, 28], [20, 22], [0.1, 0.2]):
            d = json.loads(json.dumps(base))
            d["vehicles"][2].update(x=bx, v=bv, v_ref=bv)
            d["vehicles"][1]["x"] = fx
            d["controller"]["gains"]["alpha"] = al
            yield f"back x={bx} v={bv} front x={fx} alpha={al}", d


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", choices=["scenario2", "scenario3"])
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()
    logging.disable(logging.WARNING)
    base = json.loads((ROOT / "scenarios" / f"{args.scenario}.json").read_text())
    n = bad = 0
    for label, d in variants(args.scenario, base):
        sc = from_dict(ScenarioConfig, d)
        log = run(sc)
        inv = check_invariance(log, args.tol)
        ego = sc.vehicles[0]
        viol = lyapunov_violations(log, ego.name, ego.command_time)
        err = abs(log.final(ego.name).y - log.final(ego.name).y_ref)
        fb = sum(r.fallback for r in log.records)
        ok = inv.passed and not viol and err < 0.05 * sc.geometry.lane_width and fb == 0
        n += 1
        bad += not ok
        flag = "ok  " if ok else "FAIL"
        print(f"{flag} {label:40s} min b {inv.worst_value:+.4f} ({inv.worst_barrier}) V-rises {len(viol)} fallbacks {fb} final |e| {err:.3f}")
    print(f"{bad} of {n} variants fail")


if __name__ == "__main__":
    main()
