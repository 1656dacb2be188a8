"""Barrier and Lyapunov certificates and the affine QP rows they induce.

Every barrier couples the ego with exactly one neighbour slot, so each is
written over the local state ``p = (x_E, y_E, psi_E, x_N, y_N, psi_N)``
together with the ego's previously applied speed ``v_hat`` and the
neighbour's measured speed ``v_n``; both speeds are constants while
differentiating.  Neighbours are taken to move straight at constant speed.

For a barrier ``b`` with value, gradient ``g`` and Hessian ``H`` the chain is

    psi1      = g . f(p; v_hat, omega_hat) + k1 * b
    grad psi1 = H f + J_f^T g + k1 g

and the QP row is the total derivative of ``b`` (relative degree one) or of
``psi1`` (relative degree two) with the ego's flow carrying the decision
inputs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import coordination as co
from .coordination import CoordinationConfig
from .perception import LaneGeometry, NeighborFrame, Slot

# floor for speeds used as theta denominators; a stopped vehicle reads as
# a very short safety distance, which shrinks lambda (the conservative side)
MIN_SPEED = 0.1


class CorruptFrameError(ValueError):
    pass


class Barrier(IntEnum):
    B1 = 1
    B2 = 2
    B3 = 3
    B4 = 4
    B5 = 5
    B6 = 6
    B7 = 7

    @property
    def partner(self) -> Slot:
        return _PARTNER[self]

    @property
    def relative_degree(self) -> int:
        return 2 if self in (Barrier.B2, Barrier.B3, Barrier.B4, Barrier.B5) else 1


_PARTNER = {
    Barrier.B1: Slot.FRONT,
    Barrier.B2: Slot.RIGHT_BACK,
    Barrier.B3: Slot.RIGHT_FRONT,
    Barrier.B4: Slot.LEFT_BACK,
    Barrier.B5: Slot.LEFT_FRONT,
    Barrier.B6: Slot.RIGHT_FRONT,
    Barrier.B7: Slot.LEFT_FRONT,
}


@dataclass(frozen=True)
class ClassKConfig:
    gamma1: float = 1.0
    gamma2: float = 1.0
    mu1: float = 1.0
    alpha: float = 0.8

    def __post_init__(self):
        if min(self.gamma1, self.gamma2, self.mu1, self.alpha) <= 0:
            raise ValueError("class-K gains must be strictly positive")


@dataclass(frozen=True)
class ConstraintRow:
    """``a_v * v + a_omega * omega + a_delta_omega * delta_omega >= rhs``."""

    a_v: float
    a_omega: float
    a_delta_omega: float
    rhs: float
    source: str

    def slack(self, v: float, omega: float, delta_omega: float = 0.0) -> float:
        return self.a_v * v + self.a_omega * omega + self.a_delta_omega * delta_omega - self.rhs


@dataclass(frozen=True)
class BarrierEval:
    id: Barrier
    value: float
    psi1: float | None
    row: ConstraintRow


@dataclass(frozen=True)
class LocalState:
    p: np.ndarray
    v_hat: float
    omega_hat: float
    v_n: float
    lane: int


def local_state(frame: NeighborFrame, barrier: Barrier) -> LocalState:
    e, n = frame.ego, frame[barrier.partner]
    p = np.array([e.x, e.y, e.psi, n.state.x, n.state.y, n.state.psi])
    return LocalState(p, e.v_applied, e.omega_applied, n.speed, frame.lane)


# --------------------------------------------------------------------------
# value, gradient and Hessian per barrier


def _lateral(p, sign_y, bound, front, back, speed, geometry, coord):
    """``sign_y * (y_E - bound) + w * lambda(theta(x_front, x_back, speed))``."""
    w, lp = geometry.lane_width, coord.lambda_
    d = coord.tau_d * max(speed, MIN_SPEED)
    th = co.theta(p[front], p[back], max(speed, MIN_SPEED), coord.tau_d)
    lam, dlam, ddlam = co.lambda_(th, lp), co.lambda_prime(th, lp), co.lambda_second(th, lp)
    b = sign_y * (p[1] - bound) + w * lam
    g = np.zeros(6)
    g[1] = sign_y
    g[front] += w * dlam / d
    g[back] -= w * dlam / d
    h = np.zeros((6, 6))
    c = w * ddlam / d**2
    h[front, front] = h[back, back] = c
    h[front, back] = h[back, front] = -c
    return b, g, h


def _longitudinal(p, v_hat, upper, lower, geometry, coord):
    """``x_N - x_E - tau * v_hat * sigma(rho(y_upper, y_lower))``."""
    w, sp, tau = geometry.lane_width, coord.sigma, coord.tau_d
    r = co.rho(p[upper], p[lower], w)
    s, ds, dds = co.sigma(r, sp), co.sigma_prime(r, sp), co.sigma_second(r, sp)
    b = p[3] - p[0] - tau * v_hat * s
    g = np.zeros(6)
    g[0], g[3] = -1.0, 1.0
    g[upper] -= tau * v_hat * ds / w
    g[lower] += tau * v_hat * ds / w
    h = np.zeros((6, 6))
    c = -tau * v_hat * dds / w**2
    h[upper, upper] = h[lower, lower] = c
    h[upper, lower] = h[lower, upper] = -c
    return b, g, h


def barrier_terms(barrier: Barrier, ls: LocalState, geometry: LaneGeometry, coord: CoordinationConfig):
    """Return ``(b, grad b, hess b)`` over the local state."""
    p, lane = ls.p, ls.lane
    if barrier is Barrier.B1:
        g = np.array([-1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        return p[3] - p[0] - coord.tau_d * ls.v_hat, g, np.zeros((6, 6))
    if barrier is Barrier.B2:
        return _lateral(p, 1.0, geometry.y_min(lane), 0, 3, ls.v_n, geometry, coord)
    if barrier is Barrier.B3:
        return _lateral(p, 1.0, geometry.y_min(lane), 3, 0, ls.v_hat, geometry, coord)
    if barrier is Barrier.B4:
        return _lateral(p, -1.0, geometry.y_max(lane), 0, 3, ls.v_n, geometry, coord)
    if barrier is Barrier.B5:
        return _lateral(p, -1.0, geometry.y_max(lane), 3, 0, ls.v_hat, geometry, coord)
    if barrier is Barrier.B6:
        return _longitudinal(p, ls.v_hat, 1, 4, geometry, coord)
    if barrier is Barrier.B7:
        return _longitudinal(p, ls.v_hat, 4, 1, geometry, coord)
    raise ValueError(barrier)


def flow(p: np.ndarray, v_e: float, omega_e: float, v_n: float) -> np.ndarray:
    ce, se, cn, sn = math.cos(p[2]), math.sin(p[2]), math.cos(p[5]), math.sin(p[5])
    return np.array([v_e * ce, v_e * se, omega_e, v_n * cn, v_n * sn, 0.0])


def flow_jacobian(p: np.ndarray, v_e: float, v_n: float) -> np.ndarray:
    j = np.zeros((6, 6))
    j[0, 2] = -v_e * math.sin(p[2])
    j[1, 2] = v_e * math.cos(p[2])
    j[3, 5] = -v_n * math.sin(p[5])
    j[4, 5] = v_n * math.cos(p[5])
    return j


def psi1_terms(barrier, ls, geometry, coord, gains) -> tuple[float, np.ndarray]:
    """First chain function with frozen ego input, and its state gradient."""
    b, g, h = barrier_terms(barrier, ls, geometry, coord)
    f = flow(ls.p, ls.v_hat, ls.omega_hat, ls.v_n)
    psi1 = float(g @ f) + gains.gamma1 * b
    grad = h @ f + flow_jacobian(ls.p, ls.v_hat, ls.v_n).T @ g + gains.gamma1 * g
    return psi1, grad


def row_from_gradient(grad, value, gain, p, v_n, source, a_delta=0.0) -> ConstraintRow:
    """Row for ``d/dt value + gain * value >= 0`` with the ego flow affine in (v, omega)."""
    ce, se, cn, sn = math.cos(p[2]), math.sin(p[2]), math.cos(p[5]), math.sin(p[5])
    drift = grad[3] * v_n * cn + grad[4] * v_n * sn
    row = ConstraintRow(
        a_v=float(grad[0] * ce + grad[1] * se),
        a_omega=float(grad[2]),
        a_delta_omega=a_delta,
        rhs=float(-drift - gain * value),
        source=source,
    )
    if not all(math.isfinite(c) for c in (row.a_v, row.a_omega, row.rhs)):
        raise CorruptFrameError(f"non-finite coefficients in {source} row")
    return row


def eval_b(barrier: Barrier, frame: NeighborFrame, geometry: LaneGeometry, coord: CoordinationConfig) -> float:
    b, _, _ = barrier_terms(barrier, local_state(frame, barrier), geometry, coord)
    if not math.isfinite(b):
        raise CorruptFrameError(f"{barrier.name} evaluated to {b}")
    return float(b)


def speed_sensitivity(barrier: Barrier, ls: LocalState, geometry: LaneGeometry, coord: CoordinationConfig) -> float:
    """d b / d v_hat for the barriers whose safety distance scales with the ego speed."""
    if barrier is Barrier.B1:
        return -coord.tau_d
    if barrier in (Barrier.B6, Barrier.B7):
        upper, lower = (1, 4) if barrier is Barrier.B6 else (4, 1)
        r = co.rho(ls.p[upper], ls.p[lower], geometry.lane_width)
        return -coord.tau_d * co.sigma(r, coord.sigma)
    return 0.0


def barrier_row(barrier, frame, geometry, coord, gains, period: float | None = None) -> BarrierEval:
    """QP row for one barrier.

    With ``period`` set, the rows of B1, B6 and B7 keep the speed-change term
    that the frozen-input convention drops, as a backward difference
    ``(v - v_hat) / period``.  The sampled value of b then obeys
    ``b[k+1] >= (1 - k1 * period) * b[k]`` for straight motion.
    """
    ls = local_state(frame, barrier)
    if barrier is Barrier.B1 and abs(ls.p[2]) >= math.pi / 2:
        raise ValueError(f"B1 is only a valid barrier for |psi_E| < pi/2, got {ls.p[2]}")
    b, g, _ = barrier_terms(barrier, ls, geometry, coord)
    if not math.isfinite(b):
        raise CorruptFrameError(f"{barrier.name} evaluated to {b}")
    if barrier.relative_degree == 1:
        row = row_from_gradient(g, b, gains.gamma1, ls.p, ls.v_n, barrier.name)
        if period is not None:
            if not period > 0:
                raise ValueError("period must be positive")
            c = speed_sensitivity(barrier, ls, geometry, coord) / period
            row = dataclasses.replace(row, a_v=row.a_v + c, rhs=row.rhs + c * ls.v_hat)
        return BarrierEval(barrier, float(b), None, row)
    psi1, grad = psi1_terms(barrier, ls, geometry, coord, gains)
    row = row_from_gradient(grad, psi1, gains.gamma2, ls.p, ls.v_n, barrier.name)
    return BarrierEval(barrier, float(b), psi1, row)


def barrier_rows(frame, geometry, coord, gains, period: float | None = None) -> list[BarrierEval]:
    return [barrier_row(k, frame, geometry, coord, gains, period) for k in Barrier]


# --------------------------------------------------------------------------
# lane-tracking Lyapunov function V = (y_ref - y_E)^2 / 2


def lyapunov_value(y_e: float, y_ref: float) -> float:
    return 0.5 * (y_ref - y_e) ** 2


def eta0_terms(y_e, psi_e, v_hat, y_ref, alpha) -> tuple[float, float, float]:
    """eta0 = -dV/dt - alpha V with frozen speed, plus d/dy_E and d/dpsi_E."""
    e = y_ref - y_e
    s, c = math.sin(psi_e), math.cos(psi_e)
    eta0 = e * v_hat * s - alpha * 0.5 * e * e
    return eta0, -v_hat * s + alpha * e, e * v_hat * c


def lyapunov_row(frame: NeighborFrame, y_ref: float, gains: ClassKConfig) -> tuple[ConstraintRow, float, float]:
    """Return the slacked tracking row, V and eta0."""
    ego = frame.ego
    eta0, d_y, d_psi = eta0_terms(ego.y, ego.psi, ego.v_applied, y_ref, gains.alpha)
    row = ConstraintRow(
        a_v=d_y * math.sin(ego.psi),
        a_omega=d_psi,
        a_delta_omega=1.0,
        rhs=-gains.mu1 * eta0,
        source="V",
    )
    return row, lyapunov_value(ego.y, y_ref), eta0
