"""Scenario configuration and strict JSON loading.

Unknown keys are rejected everywhere: a typo in a safety parameter must not
silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .coordination import CoordinationConfig
from .perception import LaneGeometry
from .qp import ControllerParams


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; message names the field."""


@dataclass(frozen=True)
class VehicleSpec:
    name: str
    x: float
    y: float
    v: float
    v_ref: float
    lanes: tuple[tuple[float, int], ...]  # (time [s], target lane), sorted by time
    psi: float = 0.0

    def lane_at(self, t: float) -> int:
        lane = self.lanes[0][1]
        for start, target in self.lanes:
            if start <= t + 1e-9:
                lane = target
        return lane

    @property
    def command_time(self) -> float:
        """Time of the last change of target lane (0 if it never changes)."""
        t = 0.0
        for (_, prev), (start, target) in zip(self.lanes, self.lanes[1:]):
            if target != prev:
                t = start
        return t


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    vehicles: tuple[VehicleSpec, ...]
    geometry: LaneGeometry = field(default_factory=LaneGeometry)
    sensor_range: float = 100.0
    control_period: float = 0.1
    dt: float = 0.01
    horizon: float = 20.0
    controller: ControllerParams = field(default_factory=ControllerParams)

    @property
    def substeps(self) -> int:
        return round(self.control_period / self.dt)

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.control_period)

    def check(self) -> None:
        """Static checks; the initial-safety check lives in the simulator."""
        if not self.dt > 0 or not self.control_period > 0 or not self.horizon > 0:
            raise ConfigError("dt, control_period and horizon must be positive")
        ratio = self.control_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"dt={self.dt} does not divide control_period={self.control_period}")
        if not self.vehicles:
            raise ConfigError("vehicles: at least one vehicle required")
        if not self.sensor_range > 0:
            raise ConfigError("sensor_range must be positive")
        b = self.controller.bounds
        if not (b.v_min <= b.v_max and b.omega_min <= b.omega_max and b.v_max > 0):
            raise ConfigError("controller.bounds: empty input box")
        names = [v.name for v in self.vehicles]
        if len(set(names)) != len(names):
            raise ConfigError("vehicles: names must be unique")
        for i, v in enumerate(self.vehicles):
            where = f"vehicles[{i}]"
            if not v.lanes:
                raise ConfigError(f"{where}.lanes: empty lane schedule")
            times = [t for t, _ in v.lanes]
            if times[0] != 0 or times != sorted(times):
                raise ConfigError(f"{where}.lanes: times must start at 0 and be sorted")
            for _, lane in v.lanes:
                if not 1 <= lane <= self.geometry.lane_count:
                    raise ConfigError(f"{where}.lanes: lane {lane} outside 1..{self.geometry.lane_count}")
            if not abs(v.psi) < math.pi / 2:
                raise ConfigError(f"{where}.psi: heading must lie in (-pi/2, pi/2)")
            if v.v < 0 or v.v_ref < 0:
                raise ConfigError(f"{where}: speeds must be nonnegative")


# --------------------------------------------------------------------------
# dict <-> dataclass


def _key(f: dataclasses.Field) -> str:
    return f.name.rstrip("_")


def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        return from_dict(tp, value, path)
    if origin is tuple:
        args = typing.get_args(tp)
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} entries")
        return tuple(_convert(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise TypeError(f"unsupported field type {tp} at {path}")


def from_dict(cls, data: Any, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    hints = typing.get_type_hints(cls)
    fields = {_key(f): f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path or '<root>'}: unknown field(s) {', '.join(unknown)}")
    kwargs = {}
    for key, f in fields.items():
        sub = f"{path}.{key}" if path else key
        if key in data:
            kwargs[f.name] = _convert(hints[f.name], data[key], sub)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{sub}: missing required field")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from exc


def to_dict(obj) -> Any:
    if dataclasses.is_dataclass(obj):
        return {_key(f): to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [to_dict(v) for v in obj]
    return obj


def _read_json(path: Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    sc = from_dict(ScenarioConfig, _read_json(Path(path)))
    sc.check()
    return sc


def load_coordination(path: str | Path) -> CoordinationConfig:
    """Coordination parameters from a scenario file or a bare coordination file."""
    data = _read_json(Path(path))
    if isinstance(data, dict) and "vehicles" in data:
        return load_scenario(path).controller.coordination
    return from_dict(CoordinationConfig, data)
