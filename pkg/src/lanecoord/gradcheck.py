"""Finite-difference certification of the QP row coefficients.

Every row is the time derivative of a scalar ``h`` (b for relative degree one,
psi1 for relative degree two, eta0 for the tracking row) along the local flow,
split into the part multiplying ``v``, the part multiplying ``omega`` and the
neighbour drift.  Each part is a directional derivative of ``h`` and is
compared against a central difference along the same direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import certificates as cert
from . import coordination as co
from .certificates import Barrier, ClassKConfig, LocalState
from .coordination import CUBIC_END, LINEAR_END, CoordinationConfig
from .perception import LaneGeometry, Neighbor, NeighborFrame, Slot
from .vehicle import VehicleState

RTOL = 1e-5
STEP = 1e-6
BREAKPOINT_MARGIN = 1e-3


@dataclass(frozen=True)
class Comparison:
    frame: int
    source: str
    coefficient: str
    analytic: float
    numeric: float

    @property
    def rel_error(self) -> float:
        return abs(self.analytic - self.numeric) / max(abs(self.analytic), abs(self.numeric), 1.0)


@dataclass
class GradCheckReport:
    n_frames: int
    n_skipped: int
    rtol: float
    comparisons: int = 0
    worst: Comparison | None = None
    failures: list[Comparison] = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return 0.0 if self.worst is None else self.worst.rel_error

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, c: Comparison) -> None:
        self.comparisons += 1
        if self.worst is None or c.rel_error > self.worst.rel_error:
            self.worst = c
        if not c.rel_error <= self.rtol:
            self.failures.append(c)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        s = (
            f"{verdict}: {self.comparisons} coefficients over {self.n_frames} frames "
            f"({self.n_skipped} skipped near lambda breakpoints), max rel error {self.max_rel_error:.3g} "
            f"(tol {self.rtol:g})"
        )
        if self.worst is not None and not self.passed:
            w = self.worst
            s += f"; worst {w.source}.{w.coefficient} in frame {w.frame}: analytic {w.analytic:.10g} vs fd {w.numeric:.10g}"
        return s


# --------------------------------------------------------------------------
# random frames


def random_frame(rng: np.random.Generator, geometry: LaneGeometry, r_s: float = 100.0, v_max: float = 30.0) -> NeighborFrame:
    """Ego somewhere on the road with a real vehicle in every slot."""
    lane = int(rng.integers(1, geometry.lane_count + 1))
    w = geometry.lane_width
    ego = VehicleState(
        x=float(rng.uniform(-50, 50)),
        y=float(geometry.center(lane) + rng.uniform(-0.45, 0.45) * w),
        psi=float(rng.uniform(-0.3, 0.3)),
        v_applied=float(rng.uniform(1.0, v_max)),
        omega_applied=float(rng.uniform(-0.5, 0.5)),
    )
    slots = {}
    for slot in Slot:
        dx = float(rng.uniform(2.0, 0.8 * r_s))
        if not slot.is_front:
            dx = -dx
        y = geometry.center(lane + slot.lane_offset) + rng.uniform(-0.45, 0.45) * w
        state = VehicleState(ego.x + dx, float(y), float(rng.uniform(-0.2, 0.2)), float(rng.uniform(1.0, v_max)), 0.0)
        slots[slot] = Neighbor(state, is_mock=False, index=None)
    return NeighborFrame(ego, lane, slots)


def near_breakpoint(frame: NeighborFrame, coord: CoordinationConfig, margin: float = BREAKPOINT_MARGIN) -> bool:
    """True if any lateral barrier evaluates lambda within ``margin`` of a branch switch."""
    e = frame.ego
    pairs = [
        (e.x, frame[Slot.RIGHT_BACK].state.x, frame[Slot.RIGHT_BACK].speed),
        (frame[Slot.RIGHT_FRONT].state.x, e.x, e.v_applied),
        (e.x, frame[Slot.LEFT_BACK].state.x, frame[Slot.LEFT_BACK].speed),
        (frame[Slot.LEFT_FRONT].state.x, e.x, e.v_applied),
    ]
    for front, back, speed in pairs:
        th = (front - back) / (coord.tau_d * max(speed, cert.MIN_SPEED))
        if min(abs(th - LINEAR_END), abs(th - CUBIC_END)) <= margin:
            return True
    return False


# --------------------------------------------------------------------------
# directional differences


def _directions(p: np.ndarray, v_n: float):
    dv = np.array([math.cos(p[2]), math.sin(p[2]), 0.0, 0.0, 0.0, 0.0])
    dw = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    dn = np.array([0.0, 0.0, 0.0, v_n * math.cos(p[5]), v_n * math.sin(p[5]), 0.0])
    return dv, dw, dn


def _central(fn: Callable[[np.ndarray], float], p: np.ndarray, d: np.ndarray, h: float) -> float:
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        return 0.0
    u = d / norm
    return norm * (fn(p + h * u) - fn(p - h * u)) / (2.0 * h)


def _scalar(barrier: Barrier, ls: LocalState, geometry, coord, gains) -> Callable[[np.ndarray], float]:
    """The function whose time derivative the barrier's row encodes."""

    def at(p: np.ndarray) -> float:
        moved = LocalState(p, ls.v_hat, ls.omega_hat, ls.v_n, ls.lane)
        if barrier.relative_degree == 1:
            return float(cert.barrier_terms(barrier, moved, geometry, coord)[0])
        return cert.psi1_terms(barrier, moved, geometry, coord, gains)[0]

    return at


RowFn = Callable[..., "cert.BarrierEval"]


def check_frame(
    index: int,
    frame: NeighborFrame,
    geometry: LaneGeometry,
    coord: CoordinationConfig,
    gains: ClassKConfig,
    y_ref: float,
    h: float = STEP,
    row_fn: RowFn = cert.barrier_row,
) -> list[Comparison]:
    out: list[Comparison] = []
    for k in Barrier:
        ls = cert.local_state(frame, k)
        ev = row_fn(k, frame, geometry, coord, gains)
        fn = _scalar(k, ls, geometry, coord, gains)
        gain = gains.gamma1 if k.relative_degree == 1 else gains.gamma2
        value = fn(ls.p)
        dv, dw, dn = _directions(ls.p, ls.v_n)
        drift = _central(fn, ls.p, dn, h)
        out.append(Comparison(index, k.name, "a_v", ev.row.a_v, _central(fn, ls.p, dv, h)))
        out.append(Comparison(index, k.name, "a_omega", ev.row.a_omega, _central(fn, ls.p, dw, h)))
        out.append(Comparison(index, k.name, "rhs", ev.row.rhs, -drift - gain * value))

        if k.relative_degree == 1:
            sens = cert.speed_sensitivity(k, ls, geometry, coord)

            def at_speed(v: float) -> float:
                moved = LocalState(ls.p, v, ls.omega_hat, ls.v_n, ls.lane)
                return float(cert.barrier_terms(k, moved, geometry, coord)[0])

            fd = (at_speed(ls.v_hat + h) - at_speed(ls.v_hat - h)) / (2.0 * h)
            out.append(Comparison(index, k.name, "db/dv_hat", sens, fd))

    e = frame.ego
    row, _, _ = cert.lyapunov_row(frame, y_ref, gains)

    def eta(q: np.ndarray) -> float:
        return cert.eta0_terms(q[1], q[2], e.v_applied, y_ref, gains.alpha)[0]

    p = np.array([e.x, e.y, e.psi, 0.0, 0.0, 0.0])
    dv, dw, _ = _directions(p, 0.0)
    out.append(Comparison(index, "V", "a_v", row.a_v, _central(eta, p, dv, h)))
    out.append(Comparison(index, "V", "a_omega", row.a_omega, _central(eta, p, dw, h)))
    out.append(Comparison(index, "V", "rhs", row.rhs, -gains.mu1 * eta(p)))
    return out


def check_scalars(index: int, rng: np.random.Generator, coord: CoordinationConfig, h: float = STEP) -> list[Comparison]:
    """lambda at a random theta off its kinks and sigma at a random rho."""
    lp, sp = coord.lambda_, coord.sigma
    while True:
        th = float(rng.uniform(BREAKPOINT_MARGIN, 2.0))
        if min(abs(th - LINEAR_END), abs(th - CUBIC_END)) > BREAKPOINT_MARGIN:
            break
    r = float(rng.uniform(0.0, 1.5))
    d1 = (co.lambda_(th + h, lp) - co.lambda_(th - h, lp)) / (2 * h)
    d2 = (co.lambda_prime(th + h, lp) - co.lambda_prime(th - h, lp)) / (2 * h)
    s1 = (co.sigma(r + h, sp) - co.sigma(r - h, sp)) / (2 * h)
    s2 = (co.sigma_prime(r + h, sp) - co.sigma_prime(r - h, sp)) / (2 * h)
    return [
        Comparison(index, "lambda", "d1", co.lambda_prime(th, lp), d1),
        Comparison(index, "lambda", "d2", co.lambda_second(th, lp), d2),
        Comparison(index, "sigma", "d1", co.sigma_prime(r, sp), s1),
        Comparison(index, "sigma", "d2", co.sigma_second(r, sp), s2),
    ]


def run_gradcheck(
    n_samples: int = 1000,
    seed: int = 0,
    geometry: LaneGeometry | None = None,
    coord: CoordinationConfig | None = None,
    gains: ClassKConfig | None = None,
    rtol: float = RTOL,
    h: float = STEP,
    row_fn: RowFn = cert.barrier_row,
) -> GradCheckReport:
    """Certify rows on ``n_samples`` random frames; frames near lambda's kinks are redrawn."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    geometry = geometry or LaneGeometry()
    coord = coord or CoordinationConfig()
    gains = gains or ClassKConfig()
    rng = np.random.default_rng(seed)
    report = GradCheckReport(n_samples, 0, rtol)
    done = 0
    while done < n_samples:
        frame = random_frame(rng, geometry)
        if near_breakpoint(frame, coord):
            report.n_skipped += 1
            continue
        target = min(max(frame.lane + int(rng.integers(-1, 2)), 1), geometry.lane_count)
        for c in check_frame(done, frame, geometry, coord, gains, geometry.center(target), h, row_fn):
            report.add(c)
        for c in check_scalars(done, rng, coord, h):
            report.add(c)
        done += 1
    return report
