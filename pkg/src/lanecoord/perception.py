"""Neighbour classification into the six relative slots around a vehicle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .vehicle import HEADING_LIMIT, StateError, VehicleState


class Slot(str, Enum):
    LEFT_FRONT = "+1F"
    LEFT_BACK = "+1B"
    FRONT = "0F"
    BACK = "0B"
    RIGHT_FRONT = "-1F"
    RIGHT_BACK = "-1B"

    @property
    def lane_offset(self) -> int:
        return {"+": 1, "0": 0, "-": -1}[self.value[0]]

    @property
    def is_front(self) -> bool:
        return self.value.endswith("F")

    @classmethod
    def of(cls, lane_offset: int, front: bool) -> "Slot":
        sign = {1: "+1", 0: "0", -1: "-1"}[lane_offset]
        return cls(sign + ("F" if front else "B"))


@dataclass(frozen=True)
class LaneGeometry:
    lane_width: float = 4.0
    lane_count: int = 2
    epsilon: float = 0.1

    def __post_init__(self):
        if not self.lane_width > 0:
            raise ValueError("lane_width must be positive")
        if self.lane_count < 2:
            raise ValueError("lane_count must be at least 2")
        if not 0 <= self.epsilon < self.lane_width / 2:
            raise ValueError("epsilon must lie in [0, lane_width/2)")

    def center(self, lane: int) -> float:
        return lane * self.lane_width

    def y_min(self, lane: int) -> float:
        return lane * self.lane_width - self.lane_width / 2 + self.epsilon

    def y_max(self, lane: int) -> float:
        return lane * self.lane_width + self.lane_width / 2 - self.epsilon


def lane_of(y: float, geometry: LaneGeometry) -> int:
    lane = math.floor(y / geometry.lane_width + 0.5)
    return min(max(lane, 1), geometry.lane_count)


@dataclass(frozen=True)
class Neighbor:
    state: VehicleState
    is_mock: bool = False
    index: int | None = None  # position in the world list, None for mocks

    @property
    def speed(self) -> float:
        return self.state.v_applied


@dataclass(frozen=True)
class NeighborFrame:
    ego: VehicleState
    lane: int
    slots: Mapping[Slot, Neighbor]

    def __getitem__(self, slot: Slot) -> Neighbor:
        return self.slots[slot]

    def real_slots(self) -> dict[Slot, Neighbor]:
        return {s: n for s, n in self.slots.items() if not n.is_mock}


def mock_neighbor(ego: VehicleState, lane: int, slot: Slot, geometry: LaneGeometry, r_s: float, v_mock: float) -> Neighbor:
    dx = r_s if slot.is_front else -r_s
    y = geometry.center(lane + slot.lane_offset)
    return Neighbor(VehicleState(ego.x + dx, y, 0.0, v_mock, 0.0), is_mock=True)


def classify(
    ego: VehicleState,
    others: Iterable[VehicleState],
    geometry: LaneGeometry,
    r_s: float,
    v_mock: float,
) -> NeighborFrame:
    if not -HEADING_LIMIT < ego.psi < HEADING_LIMIT:
        raise StateError(f"ego heading {ego.psi:.4f} outside (-pi/2, pi/2)")
    lane = lane_of(ego.y, geometry)
    best: dict[Slot, tuple[float, Neighbor]] = {}
    for idx, other in enumerate(others):
        if math.hypot(other.x - ego.x, other.y - ego.y) > r_s:
            continue
        offset = lane_of(other.y, geometry) - lane
        if offset not in (-1, 0, 1):
            continue
        dx = other.x - ego.x
        if dx == 0.0:
            front = offset >= 0  # left and same lane count as front, right as back
        else:
            front = dx > 0.0
        slot = Slot.of(offset, front)
        if slot not in best or abs(dx) < best[slot][0]:
            best[slot] = (abs(dx), Neighbor(other, False, idx))
    slots = {}
    for slot in Slot:
        if slot in best:
            slots[slot] = best[slot][1]
        else:
            slots[slot] = mock_neighbor(ego, lane, slot, geometry, r_s, v_mock)
    return NeighborFrame(ego, lane, slots)
