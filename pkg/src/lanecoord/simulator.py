"""Synchronous decentralized multi-vehicle simulation.

Every control period each vehicle classifies its neighbours from a frozen
snapshot of the world, solves its own QP and only then are all inputs
applied and integrated together.  A vehicle's controller sees its frame
and its own references, nothing else.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .certificates import Barrier, eval_b
from .config import ConfigError, ScenarioConfig
from .perception import classify
from .qp import control_step
from .vehicle import VehicleState, advance, with_input

BARRIER_NAMES = tuple(b.name for b in Barrier)


class SimulationError(RuntimeError):
    pass


@dataclass
class StepRecord:
    step: int
    time: float
    vehicle: str
    x: float
    y: float
    psi: float
    v: float
    omega: float
    lane: int
    target_lane: int
    y_ref: float
    v_ref: float
    barriers: dict[str, float]
    lyapunov: float
    eta0: float
    delta_v: float
    delta_omega: float
    status: str
    active: list[str]
    fallback: bool
    real_neighbors: dict[str, str] = field(default_factory=dict)


@dataclass
class TrajectoryLog:
    scenario: str
    records: list[StepRecord]
    wall_times: list[float] = field(default_factory=list)  # not part of the saved log

    def vehicles(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.vehicle not in seen:
                seen.append(r.vehicle)
        return seen

    def of(self, vehicle: str) -> list[StepRecord]:
        return [r for r in self.records if r.vehicle == vehicle]

    def final(self, vehicle: str) -> StepRecord:
        return self.of(vehicle)[-1]

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps({"scenario": self.scenario, **asdict(r)}, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "TrajectoryLog":
        records, name = [], ""
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                name = d.pop("scenario", name)
                records.append(StepRecord(**d))
        return cls(name, records)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["time", "vehicle", "x", "y", "v", "min_barrier"])
            for r in self.records:
                wr.writerow([f"{r.time:.3f}", r.vehicle, r.x, r.y, r.v, min(r.barriers.values())])


def initial_states(scenario: ScenarioConfig) -> list[VehicleState]:
    return [VehicleState(v.x, v.y, v.psi, v.v, 0.0) for v in scenario.vehicles]


def _frame(scenario: ScenarioConfig, states: list[VehicleState], i: int):
    others = states[:i] + states[i + 1 :]
    frame = classify(
        states[i], others, scenario.geometry, scenario.sensor_range, scenario.controller.bounds.v_max
    )
    return frame


def check_initially_safe(scenario: ScenarioConfig) -> None:
    states = initial_states(scenario)
    coord = scenario.controller.coordination
    for i, spec in enumerate(scenario.vehicles):
        frame = _frame(scenario, states, i)
        for k in Barrier:
            value = eval_b(k, frame, scenario.geometry, coord)
            if value < 0:
                raise ConfigError(f"vehicles[{i}] ({spec.name}): initially unsafe, {k.name} = {value:.4g} < 0")


def run(scenario: ScenarioConfig) -> TrajectoryLog:
    scenario.check()
    check_initially_safe(scenario)
    geo, params = scenario.geometry, scenario.controller
    states = initial_states(scenario)
    records: list[StepRecord] = []
    wall: list[float] = []
    names = [v.name for v in scenario.vehicles]
    for k in range(scenario.n_steps + 1):
        t = k * scenario.control_period
        inputs = []
        for i, spec in enumerate(scenario.vehicles):
            frame = _frame(scenario, states, i)
            others = names[:i] + names[i + 1 :]  # classify indexes the other vehicles only
            target = spec.lane_at(t)
            y_ref = geo.center(target)
            res = control_step(frame, spec.v_ref, y_ref, geo, params, scenario.control_period)
            wall.append(res.wall_time)
            inputs.append(res.input)
            sol, qp = res.solution, res.problem
            s = states[i]
            records.append(
                StepRecord(
                    step=k,
                    time=t,
                    vehicle=spec.name,
                    x=s.x,
                    y=s.y,
                    psi=s.psi,
                    v=res.input.v,
                    omega=res.input.omega,
                    lane=frame.lane,
                    target_lane=target,
                    y_ref=y_ref,
                    v_ref=spec.v_ref,
                    barriers={e.id.name: e.value for e in qp.barriers},
                    lyapunov=qp.lyapunov,
                    eta0=qp.eta0,
                    delta_v=sol.delta_v,
                    delta_omega=sol.delta_omega,
                    status=sol.status,
                    active=list(sol.active),
                    fallback=res.fallback,
                    real_neighbors={slot.value: others[n.index] for slot, n in frame.real_slots().items()},
                )
            )
        if k == scenario.n_steps:
            break
        new_states = []
        for i, (s, u) in enumerate(zip(states, inputs)):
            try:
                new_states.append(advance(s, u, scenario.control_period, scenario.dt))
            except ValueError as exc:
                raise SimulationError(f"t={t:.2f} vehicle {names[i]}: {exc}") from exc
        states = new_states
    return TrajectoryLog(scenario.name, records, wall)


# --------------------------------------------------------------------------
# invariance


@dataclass
class InvarianceReport:
    passed: bool
    tol: float
    minima: dict[str, float]
    worst_barrier: str | None
    worst_value: float
    worst_step: int | None
    worst_time: float | None
    worst_vehicle: str | None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        if self.worst_barrier is None:
            return f"{verdict}: empty log"
        return (
            f"{verdict}: min barrier {self.worst_barrier} = {self.worst_value:.6g} "
            f"(vehicle {self.worst_vehicle}, step {self.worst_step}, t = {self.worst_time:.2f} s), tol {self.tol:g}"
        )


def check_invariance(log: TrajectoryLog, tol: float = 1e-3) -> InvarianceReport:
    minima = {name: math.inf for name in BARRIER_NAMES}
    worst = (math.inf, None, None)
    for r in log.records:
        for name, value in r.barriers.items():
            if value < minima[name]:
                minima[name] = value
            if value < worst[0]:
                worst = (value, name, r)
    value, name, rec = worst
    passed = value >= -tol
    if rec is None:
        return InvarianceReport(True, tol, minima, None, math.inf, None, None, None)
    return InvarianceReport(passed, tol, minima, name, value, rec.step, rec.time, rec.vehicle)


def lyapunov_violations(log: TrajectoryLog, vehicle: str, command_time: float, delta_tol: float = 1e-5, tol: float = 1e-9):
    """Consecutive steps after the command where V rose although delta_omega ~ 0."""
    recs = [r for r in log.of(vehicle) if r.time >= command_time - 1e-9]
    bad = []
    for a, b in zip(recs, recs[1:]):
        if abs(a.delta_omega) <= delta_tol and b.lyapunov > a.lyapunov + tol:
            bad.append((a.time, a.lyapunov, b.lyapunov))
    return bad
