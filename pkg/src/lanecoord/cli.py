"""Command-line entry point.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, load_coordination, load_scenario
from .coordination import CoordinationConfig, validate
from .gradcheck import RTOL, run_gradcheck
from .qp import INFEASIBLE, MAX_ITER_REACHED
from .simulator import SimulationError, TrajectoryLog, check_invariance, lyapunov_violations, run
from .vehicle import StateError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    scenario: str
    invariance: str  # "PASS" or "FAIL"
    tol: float
    min_barrier: float
    min_barrier_name: str | None
    min_barrier_vehicle: str | None
    min_barrier_step: int | None
    min_barrier_time: float | None
    barrier_minima: dict[str, float]
    final_lateral_error: dict[str, float]  # |y - y_ref| at the last step
    final_speed: dict[str, float]
    solver_failures: int  # steps that ended infeasible or at max_iter
    fallbacks: int
    lyapunov_violations: dict[str, int]  # V rose with delta_omega ~ 0 after the command
    mean_step_ms: float
    max_step_ms: float
    events: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.invariance == "PASS" and self.solver_failures == 0


def make_report(log: TrajectoryLog, command_times: dict[str, float], tol: float) -> RunReport:
    inv = check_invariance(log, tol)
    failures = [r for r in log.records if r.status in (INFEASIBLE, MAX_ITER_REACHED)]
    events = [f"t={r.time:.2f} {r.vehicle}: qp {r.status}, fallback applied" for r in failures]
    wall = np.asarray(log.wall_times) if log.wall_times else np.zeros(1)
    names = log.vehicles()
    return RunReport(
        scenario=log.scenario,
        invariance="PASS" if inv.passed else "FAIL",
        tol=tol,
        min_barrier=inv.worst_value,
        min_barrier_name=inv.worst_barrier,
        min_barrier_vehicle=inv.worst_vehicle,
        min_barrier_step=inv.worst_step,
        min_barrier_time=inv.worst_time,
        barrier_minima=inv.minima,
        final_lateral_error={n: abs(log.final(n).y - log.final(n).y_ref) for n in names},
        final_speed={n: log.final(n).v for n in names},
        solver_failures=len(failures),
        fallbacks=sum(r.fallback for r in log.records),
        lyapunov_violations={n: len(lyapunov_violations(log, n, command_times.get(n, 0.0))) for n in names},
        mean_step_ms=float(wall.mean() * 1e3),
        max_step_ms=float(wall.max() * 1e3),
        events=events,
    )


# --------------------------------------------------------------------------
# subcommands


def cmd_run(config: str, out: str, tol: float = 1e-3, plot: bool = True) -> int:
    try:
        scenario = load_scenario(config)
        log = run(scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, StateError) as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.to_jsonl(out_dir / "trajectory.jsonl")
    log.to_csv(out_dir / "summary.csv")
    report = make_report(log, {v.name: v.command_time for v in scenario.vehicles}, tol)
    (out_dir / "report.json").write_text(json.dumps(asdict(report), indent=2) + "\n")
    if plot:
        from .plotting import plot_log

        plot_log(log, out_dir / "trajectory.svg", scenario.geometry)
    print(check_invariance(log, tol).line())
    print(
        f"solver failures {report.solver_failures}, fallbacks {report.fallbacks}, "
        f"mean step {report.mean_step_ms:.3f} ms, max {report.max_step_ms:.3f} ms"
    )
    for name, err in report.final_lateral_error.items():
        print(f"{name}: final |y - y_ref| = {err:.4f} m, v = {report.final_speed[name]:.3f} m/s")
    print(f"wrote {out_dir}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_validate_params(config: str | None) -> int:
    try:
        coord = load_coordination(config) if config else CoordinationConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = validate(coord)
    for line in report.lines():
        print(line)
    print("OK" if report.ok else "FAILED", f"({len(report.warnings)} warning(s))")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_check_gradients(seed: int, n_samples: int, tol: float = RTOL) -> int:
    if n_samples < 1:
        print("n-samples must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    report = run_gradcheck(n_samples, seed, rtol=tol)
    print(report.line())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_plot(log_path: str, out: str) -> int:
    from .plotting import plot_log

    try:
        log = TrajectoryLog.from_jsonl(log_path)
    except (OSError, ValueError, TypeError) as exc:
        print(f"cannot read log {log_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not log.records:
        print(f"{log_path}: empty log", file=sys.stderr)
        return EXIT_USAGE
    out_path = Path(out)
    if out_path.suffix.lower() != ".svg":
        out_path.mkdir(parents=True, exist_ok=True)
        out_path = out_path / "trajectory.svg"
    plot_log(log, out_path)
    print(f"wrote {out_path}")
    return EXIT_OK


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lanecoord", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver fallbacks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write log, report and plot")
    p.add_argument("config")
    p.add_argument("--out", default="out")
    p.add_argument("--tol", type=float, default=1e-3, help="invariance tolerance on b_k [m]")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("validate-params", help="check the coordination function axioms")
    p.add_argument("config", nargs="?", help="scenario or coordination JSON (default: built-in parameters)")

    p = sub.add_parser("check-gradients", help="finite-difference check of the QP rows")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--tol", type=float, default=RTOL, help="relative error tolerance")

    p = sub.add_parser("plot", help="render a trajectory.jsonl as SVG")
    p.add_argument("log")
    p.add_argument("--out", default="trajectory.svg", help="SVG file or directory")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.out, args.tol, not args.no_plot)
    if args.command == "validate-params":
        return cmd_validate_params(args.config)
    if args.command == "check-gradients":
        return cmd_check_gradients(args.seed, args.n_samples, args.tol)
    return cmd_plot(args.log, args.out)


if __name__ == "__main__":
    sys.exit(main())
