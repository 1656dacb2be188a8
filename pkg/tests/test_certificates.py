import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanecoord import certificates as cert
from lanecoord.certificates import Barrier, ClassKConfig, CorruptFrameError, barrier_row, eval_b, lyapunov_row
from lanecoord.coordination import CoordinationConfig, lambda_prime, sigma, sigma_prime
from lanecoord.perception import Slot
from lanecoord.vehicle import VehicleState

from helpers import GEO, free_frame, frame_with, random_ego_in_lane, random_neighbors

COORD, GAINS = CoordinationConfig(), ClassKConfig()
TAU, W = COORD.tau_d, GEO.lane_width


def test_b1_example():
    f = frame_with(VehicleState(0.0, 4.0, 0.0, 20.0), FRONT=VehicleState(50.0, 4.0, 0.0, 15.0))
    assert eval_b(Barrier.B1, f, GEO, COORD) == pytest.approx(32.0, abs=1e-12)


def test_b2_with_mock_neighbour():
    f = free_frame(VehicleState(0.0, 4.0, 0.0, 20.0))
    assert eval_b(Barrier.B2, f, GEO, COORD) == pytest.approx(1.9 + 4 * 1.01, abs=1e-6)


@given(st.floats(0.0, 60.0), st.floats(0.0, 30.0))
def test_b6_vanishes_a_full_lane_apart(gap, v_e):
    f = frame_with(VehicleState(0.0, 8.0, 0.0, v_e), RIGHT_FRONT=VehicleState(gap, 4.0, 0.0, 20.0))
    assert eval_b(Barrier.B6, f, GEO, COORD) >= gap


def test_b1_row_under_frozen_speed():
    ego = VehicleState(0.0, 4.0, 0.05, 20.0)
    lead = VehicleState(50.0, 4.2, -0.03, 15.0)
    f = frame_with(ego, FRONT=lead)
    ev = barrier_row(Barrier.B1, f, GEO, COORD, GAINS)
    b1 = 50.0 - TAU * 20.0
    assert ev.value == pytest.approx(b1)
    assert ev.row.a_v == pytest.approx(-math.cos(0.05), abs=1e-15)
    assert ev.row.a_omega == 0.0
    assert ev.row.rhs == pytest.approx(-15.0 * math.cos(-0.03) - GAINS.gamma1 * b1, abs=1e-12)
    assert ev.row.a_delta_omega == 0.0


def test_b1_row_with_sampled_speed():
    ego = VehicleState(0.0, 4.0, 0.0, 20.0)
    f = frame_with(ego, FRONT=VehicleState(50.0, 4.0, 0.0, 15.0))
    plain = barrier_row(Barrier.B1, f, GEO, COORD, GAINS).row
    sampled = barrier_row(Barrier.B1, f, GEO, COORD, GAINS, period=0.1).row
    assert sampled.a_v == pytest.approx(plain.a_v - TAU / 0.1)
    assert sampled.rhs == pytest.approx(plain.rhs - TAU / 0.1 * 20.0)


def test_sampled_b1_row_bounds_the_sampled_decay():
    # straight motion, lead at constant speed: b[k+1] = b[k] + T (v_n - v) - tau (v - v_hat)
    ego = VehicleState(0.0, 4.0, 0.0, 20.0)
    f = frame_with(ego, FRONT=VehicleState(20.0, 4.0, 0.0, 15.0))
    row = barrier_row(Barrier.B1, f, GEO, COORD, GAINS, period=0.1).row
    b0 = eval_b(Barrier.B1, f, GEO, COORD)
    v = row.rhs / row.a_v  # the row tight
    b1 = b0 + 0.1 * (15.0 - v) - TAU * (v - 20.0)
    assert b1 == pytest.approx((1 - GAINS.gamma1 * 0.1) * b0, abs=1e-12)


def test_sampled_speed_leaves_second_order_rows_alone():
    f = frame_with(VehicleState(0.0, 4.0, 0.1, 20.0), RIGHT_BACK=VehicleState(-15.0, 0.5, 0.0, 25.0))
    for k in (Barrier.B2, Barrier.B3, Barrier.B4, Barrier.B5):
        assert barrier_row(k, f, GEO, COORD, GAINS, 0.1) == barrier_row(k, f, GEO, COORD, GAINS)


def test_b6_speed_coefficient():
    ego = VehicleState(0.0, 5.0, 0.07, 20.0)
    nb = VehicleState(25.0, 2.5, 0.0, 18.0)
    f = frame_with(ego, RIGHT_FRONT=nb)
    row = barrier_row(Barrier.B6, f, GEO, COORD, GAINS).row
    r = (5.0 - 2.5) / W
    expected = -math.cos(0.07) - TAU * 20.0 * sigma_prime(r, COORD.sigma) * math.sin(0.07) / W
    assert row.a_v == pytest.approx(expected, rel=1e-12)
    sampled = barrier_row(Barrier.B6, f, GEO, COORD, GAINS, 0.1).row
    assert sampled.a_v == pytest.approx(expected - TAU * sigma(r, COORD.sigma) / 0.1, rel=1e-12)


def test_b2_row_on_free_road_is_satisfied_straight():
    ego = VehicleState(0.0, 4.0, 0.0, 20.0)
    ev = barrier_row(Barrier.B2, free_frame(ego), GEO, COORD, GAINS)
    assert ev.row.a_v * 20.0 + ev.row.a_omega * 0.0 >= ev.row.rhs
    # the lateral chain carries the turn rate through the heading
    assert ev.row.a_omega == pytest.approx(20.0, rel=1e-6)


def test_mock_distances_give_negligible_lambda_slope():
    for v in (1.0, 15.0, 30.0):
        assert lambda_prime(100.0 / (TAU * 30.0), COORD.lambda_) < 1e-12
        assert lambda_prime(100.0 / (TAU * v), COORD.lambda_) < 1e-12


@settings(max_examples=200)
@given(st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_mock_saturation(lane, seed):
    rng = np.random.default_rng(seed)
    ego = VehicleState(0.0, GEO.center(lane), 0.0, float(rng.uniform(0.0, 30.0)))
    for ev in cert.barrier_rows(free_frame(ego), GEO, COORD, GAINS):
        assert ev.row.a_v * ego.v_applied >= ev.row.rhs, ev.id


@settings(max_examples=300)
@given(st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_lane_freedom(lane, seed):
    rng = np.random.default_rng(seed)
    ego = random_ego_in_lane(rng, lane)
    f = random_neighbors(rng, ego, lane)
    for k in (Barrier.B2, Barrier.B3, Barrier.B4, Barrier.B5):
        assert eval_b(k, f, GEO, COORD) >= 0.0


@given(st.floats(0.5, 30.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_midline_admission(v_e, extra, frac):
    lane = 1
    y = GEO.y_max(lane) + frac * W / 2
    gap = (0.9 + extra) * TAU * v_e
    f = frame_with(VehicleState(0.0, y, 0.0, v_e), LEFT_FRONT=VehicleState(gap, 8.0, 0.0, 20.0))
    f = type(f)(f.ego, lane, f.slots)  # the lane index the ego held before crossing
    assert eval_b(Barrier.B5, f, GEO, COORD) >= -1e-12


def test_lyapunov_equilibrium():
    row, v, eta0 = lyapunov_row(free_frame(VehicleState(0.0, 4.0, 0.0, 20.0)), 4.0, GAINS)
    assert v == 0.0 and eta0 == 0.0 and row.rhs == 0.0
    assert row.a_v * 20.0 >= row.rhs


def test_lyapunov_one_lane_below_turns_left():
    row, v, eta0 = lyapunov_row(free_frame(VehicleState(0.0, 4.0, 0.0, 20.0)), 8.0, GAINS)
    assert v == 8.0
    assert eta0 == pytest.approx(-GAINS.alpha * v)
    assert row.rhs > 0 and row.a_omega > 0 and row.a_v == 0.0
    assert row.a_delta_omega == 1.0


@given(st.floats(0.0, 12.0), st.floats(-1.0, 1.0), st.floats(0.0, 30.0), st.floats(0.0, 12.0))
def test_eta0_gradient_matches_fd(y, psi, v, y_ref):
    h = 1e-6
    _, dy, dpsi = cert.eta0_terms(y, psi, v, y_ref, GAINS.alpha)
    fy = (cert.eta0_terms(y + h, psi, v, y_ref, GAINS.alpha)[0] - cert.eta0_terms(y - h, psi, v, y_ref, GAINS.alpha)[0]) / (2 * h)
    fp = (cert.eta0_terms(y, psi + h, v, y_ref, GAINS.alpha)[0] - cert.eta0_terms(y, psi - h, v, y_ref, GAINS.alpha)[0]) / (2 * h)
    for a, b in ((dy, fy), (dpsi, fp)):
        assert abs(a - b) / max(abs(a), abs(b), 1.0) <= 1e-5


def test_b1_needs_forward_heading():
    f = frame_with(VehicleState(0.0, 4.0, 0.0, 20.0), FRONT=VehicleState(50.0, 4.0, 0.0, 15.0))
    bad = type(f)(VehicleState(0.0, 4.0, math.pi / 2, 20.0), f.lane, f.slots)
    with pytest.raises(ValueError):
        barrier_row(Barrier.B1, bad, GEO, COORD, GAINS)


def test_non_finite_frame_is_rejected():
    f = frame_with(VehicleState(0.0, 4.0, 0.0, 20.0), FRONT=VehicleState(math.inf, 4.0, 0.0, 15.0))
    with pytest.raises(CorruptFrameError):
        barrier_row(Barrier.B1, f, GEO, COORD, GAINS)


def test_partners():
    assert Barrier.B1.partner is Slot.FRONT
    assert [k.relative_degree for k in Barrier] == [1, 2, 2, 2, 2, 1, 1]
