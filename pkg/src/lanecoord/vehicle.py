"""Unicycle kinematics and fixed-step integration under zero-order hold."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

HEADING_LIMIT = math.pi / 2


class StateError(ValueError):
    """Non-finite state or heading outside (-pi/2, pi/2)."""


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    psi: float = 0.0
    v_applied: float = 0.0
    omega_applied: float = 0.0

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in (self.x, self.y, self.psi, self.v_applied, self.omega_applied))


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float


def dynamics(state: VehicleState, u: ControlInput) -> tuple[float, float, float]:
    return u.v * math.cos(state.psi), u.v * math.sin(state.psi), u.omega


def _rk4(x: float, y: float, psi: float, v: float, omega: float, dt: float) -> tuple[float, float, float]:
    # x and y do not feed back into the derivative, only psi does
    c1, s1 = math.cos(psi), math.sin(psi)
    pm = psi + 0.5 * dt * omega
    c2, s2 = math.cos(pm), math.sin(pm)
    pe = psi + dt * omega
    c4, s4 = math.cos(pe), math.sin(pe)
    x += dt * v * (c1 + 4.0 * c2 + c4) / 6.0
    y += dt * v * (s1 + 4.0 * s2 + s4) / 6.0
    return x, y, pe


def step(state: VehicleState, u: ControlInput, dt: float) -> VehicleState:
    """Advance one RK4 step with the input held; records the held input."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not state.is_finite() or not (math.isfinite(u.v) and math.isfinite(u.omega)):
        raise StateError(f"non-finite state or input: {state}, {u}")
    x, y, psi = _rk4(state.x, state.y, state.psi, u.v, u.omega, dt)
    return VehicleState(x, y, psi, u.v, u.omega)


def advance(state: VehicleState, u: ControlInput, period: float, dt: float) -> VehicleState:
    """Integrate over one control period using ``period / dt`` substeps."""
    n = round(period / dt)
    for _ in range(n):
        state = step(state, u, dt)
    if not -HEADING_LIMIT < state.psi < HEADING_LIMIT:
        raise StateError(f"heading {state.psi:.4f} rad left (-pi/2, pi/2)")
    return state


def with_input(state: VehicleState, u: ControlInput) -> VehicleState:
    return replace(state, v_applied=u.v, omega_applied=u.omega)
