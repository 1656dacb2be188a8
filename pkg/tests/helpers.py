"""Frame builders shared by the tests."""

import numpy as np

from lanecoord.perception import LaneGeometry, Neighbor, NeighborFrame, Slot, classify
from lanecoord.vehicle import VehicleState

GEO = LaneGeometry()
R_S, V_MOCK = 100.0, 30.0


def free_frame(ego: VehicleState) -> NeighborFrame:
    return classify(ego, [], GEO, R_S, V_MOCK)


def frame_with(ego: VehicleState, **real: VehicleState) -> NeighborFrame:
    """Mocks everywhere except the named slots (FRONT=..., LEFT_BACK=...)."""
    base = free_frame(ego)
    slots = dict(base.slots)
    for i, (name, state) in enumerate(real.items()):
        slots[Slot[name]] = Neighbor(state, is_mock=False, index=i)
    return NeighborFrame(ego, base.lane, slots)


def random_ego_in_lane(rng: np.random.Generator, lane: int, v_max: float = 30.0) -> VehicleState:
    return VehicleState(
        float(rng.uniform(-50, 50)),
        float(rng.uniform(GEO.y_min(lane), GEO.y_max(lane))),
        float(rng.uniform(-0.4, 0.4)),
        float(rng.uniform(0.0, v_max)),
        float(rng.uniform(-0.5, 0.5)),
    )


def random_neighbors(rng: np.random.Generator, ego: VehicleState, lane: int) -> NeighborFrame:
    """Every slot real, anywhere within range and on the right side of the ego."""
    slots = {}
    for slot in Slot:
        dx = float(rng.uniform(0.0, R_S))
        x = ego.x + (dx if slot.is_front else -dx)
        target = lane + slot.lane_offset
        y = float(rng.uniform(GEO.y_min(target), GEO.y_max(target)))
        slots[slot] = Neighbor(VehicleState(x, y, float(rng.uniform(-0.4, 0.4)), float(rng.uniform(0.0, 30.0))), False, 0)
    return NeighborFrame(ego, lane, slots)
