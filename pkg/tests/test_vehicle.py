import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lanecoord.vehicle import ControlInput, StateError, VehicleState, advance, dynamics, step


@pytest.mark.parametrize(
    "psi, v, omega, expected",
    [
        (0.0, 1.0, 0.2, (1.0, 0.0, 0.2)),
        (math.pi / 2, 2.0, 0.0, (0.0, 2.0, 0.0)),
        (math.pi / 4, math.sqrt(2.0), 0.0, (1.0, 1.0, 0.0)),
    ],
)
def test_dynamics_examples(psi, v, omega, expected):
    got = dynamics(VehicleState(0.0, 0.0, psi), ControlInput(v, omega))
    assert got == pytest.approx(expected, abs=1e-15)


def test_straight_step_is_exact():
    s = step(VehicleState(0.0, 4.0, 0.0), ControlInput(10.0, 0.0), 0.1)
    assert s.x == 1.0 and s.y == 4.0 and s.psi == 0.0


def test_zero_speed_is_a_fixed_point():
    s0 = VehicleState(3.0, -2.0, 0.3)
    s = step(s0, ControlInput(0.0, 0.0), 1.0)
    assert (s.x, s.y, s.psi) == (s0.x, s0.y, s0.psi)


def test_arc_example():
    v, w, dt = 10.0, 0.1, 0.1
    s = step(VehicleState(0.0, 0.0, 0.0), ControlInput(v, w), dt)
    assert s.x == pytest.approx(v / w * math.sin(w * dt), abs=1e-9)
    assert s.y == pytest.approx(v / w * (1 - math.cos(w * dt)), abs=1e-9)
    assert s.psi == pytest.approx(w * dt, abs=1e-15)


def _arc_error(psi, v, omega, dt):
    """Position error of one step against the exact arc, relative to the displacement."""
    s = step(VehicleState(0.0, 0.0, psi), ControlInput(v, omega), dt)
    pe = psi + omega * dt
    x = v / omega * (math.sin(pe) - math.sin(psi))
    y = v / omega * (math.cos(psi) - math.cos(pe))
    return math.hypot(s.x - x, s.y - y) / math.hypot(x, y)


@given(
    st.floats(-1.2, 1.2),
    st.floats(0.1, 30.0),
    st.floats(-1.0, 1.0).filter(lambda w: abs(w) > 1e-3),
    st.floats(0.001, 0.1),
)
def test_rk4_matches_closed_form_arc_small_turns(psi, v, omega, dt):
    if abs(omega * dt) > 0.07:
        omega = math.copysign(0.07 / dt, omega)
    assert _arc_error(psi, v, omega, dt) <= 1e-8


@pytest.mark.parametrize("omega_dt", [0.1, -0.1])
def test_rk4_matches_closed_form_arc_at_range_limit(omega_dt):
    # heading is linear in time so RK4 reduces to Simpson's rule on cos/sin,
    # whose error here is about (omega dt)^4 / 2880 = 3.5e-8 of the displacement
    assert _arc_error(0.0, 10.0, omega_dt / 0.1, 0.1) <= 1e-8


@pytest.mark.parametrize("omega_dt", [0.02, 0.05, 0.1, 0.2])
def test_rk4_error_follows_simpson_constant(omega_dt):
    err = _arc_error(0.0, 10.0, omega_dt / 0.1, 0.1)
    assert err == pytest.approx(omega_dt**4 / 2880, rel=0.05)


@given(st.floats(-1.0, 1.0), st.floats(0.0, 30.0), st.floats(-0.5, 0.5))
def test_step_is_deterministic(psi, v, omega):
    a = step(VehicleState(1.0, 2.0, psi), ControlInput(v, omega), 0.01)
    b = step(VehicleState(1.0, 2.0, psi), ControlInput(v, omega), 0.01)
    assert a == b


def test_step_records_applied_input():
    s = step(VehicleState(0.0, 0.0), ControlInput(5.0, 0.1), 0.01)
    assert (s.v_applied, s.omega_applied) == (5.0, 0.1)


def test_advance_uses_substeps():
    u = ControlInput(12.0, 0.05)
    a = advance(VehicleState(0.0, 0.0), u, 0.1, 0.01)
    b = VehicleState(0.0, 0.0)
    for _ in range(10):
        b = step(b, u, 0.01)
    assert a == b


def test_non_finite_state_rejected():
    with pytest.raises(StateError):
        step(VehicleState(math.nan, 0.0), ControlInput(1.0, 0.0), 0.01)


def test_heading_leaving_range_aborts():
    with pytest.raises(StateError, match="heading"):
        advance(VehicleState(0.0, 0.0, 1.5), ControlInput(1.0, 0.5), 0.2, 0.01)


def test_nonpositive_dt_rejected():
    with pytest.raises(ValueError):
        step(VehicleState(0.0, 0.0), ControlInput(1.0, 0.0), 0.0)
