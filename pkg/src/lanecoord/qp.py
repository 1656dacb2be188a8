"""Per-vehicle CLF-CBF quadratic program: assembly, exact solve, grid oracle.

Decision vector ``(v, omega, delta_v, delta_omega)`` with cost

    h_v v^2 + h_omega omega^2 + p_v delta_v^2 + p_omega delta_omega^2

and the equality ``(v - v_ref) + delta_v = 0``.  The equality is eliminated
(``delta_v = v_ref - v``) leaving a 3-variable dense QP in
``z = (v, omega, delta_omega)`` with a diagonal Hessian, which is solved by
the dual active-set method of Goldfarb and Idnani.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .certificates import (
    BarrierEval,
    ClassKConfig,
    ConstraintRow,
    barrier_rows,
    lyapunov_row,
)
from .coordination import CoordinationConfig
from .perception import LaneGeometry, NeighborFrame
from .vehicle import ControlInput

log = logging.getLogger(__name__)

KKT_TOL = 1e-8
FEAS_TOL = 1e-7
MAX_ITER = 100
DEP_TOL = 1e-9

OPTIMAL, INFEASIBLE, MAX_ITER_REACHED = "optimal", "infeasible", "max_iter"


@dataclass(frozen=True)
class QpWeights:
    h_v: float = 1.0
    h_omega: float = 70_000.0
    p_v: float = 1e9
    p_omega: float = 1e9


@dataclass(frozen=True)
class InputBounds:
    v_min: float = 0.0
    v_max: float = 30.0
    omega_min: float = -0.5
    omega_max: float = 0.5


@dataclass(frozen=True)
class ControllerParams:
    coordination: CoordinationConfig = field(default_factory=CoordinationConfig)
    gains: ClassKConfig = field(default_factory=ClassKConfig)
    weights: QpWeights = field(default_factory=QpWeights)
    bounds: InputBounds = field(default_factory=InputBounds)
    # keep the speed-change term of B1/B6/B7 as a difference over the control period
    sampled_speed: bool = False


@dataclass(frozen=True)
class QpProblem:
    weights: QpWeights
    v_ref: float
    rows: tuple[ConstraintRow, ...]
    bounds: InputBounds
    barriers: tuple[BarrierEval, ...] = ()
    lyapunov: float | None = None
    eta0: float | None = None

    def hessian_diag(self) -> np.ndarray:
        w = self.weights
        return 2.0 * np.array([w.h_v + w.p_v, w.h_omega, w.p_omega])

    def linear(self) -> np.ndarray:
        return np.array([-2.0 * self.weights.p_v * self.v_ref, 0.0, 0.0])

    def constraints(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        """All inequalities as ``C z >= d``, rows first then the four box sides."""
        b = self.bounds
        c = [[r.a_v, r.a_omega, r.a_delta_omega] for r in self.rows]
        d = [r.rhs for r in self.rows]
        names = [r.source for r in self.rows]
        c += [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
        d += [b.v_min, -b.v_max, b.omega_min, -b.omega_max]
        names += ["v_min", "v_max", "omega_min", "omega_max"]
        return np.array(c, dtype=float), np.array(d, dtype=float), names

    def objective(self, v: float, omega: float, delta_omega: float) -> float:
        w = self.weights
        dv = self.v_ref - v
        return w.h_v * v * v + w.h_omega * omega * omega + w.p_v * dv * dv + w.p_omega * delta_omega * delta_omega


@dataclass
class QpSolution:
    status: str
    v: float
    omega: float
    delta_omega: float
    delta_v: float
    objective: float
    active: list[str]
    multipliers: dict[str, float]
    kkt_residual: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _scaled(qp: QpProblem):
    g = qp.hessian_diag()
    scale = g.max()
    c, d, names = qp.constraints()
    norms = np.linalg.norm(c, axis=1)
    return g / scale, qp.linear() / scale, c, d, names, norms, scale


def kkt_residual(g, a, c, d, z, mu) -> float:
    """Max of stationarity, primal, dual and complementarity violations."""
    s = c @ z - d
    stat = np.abs(g * z + a - c.T @ mu).max()
    return float(max(stat, max(0.0, -s.min()), max(0.0, -mu.min()), np.abs(mu * s).max()))


def solve(qp: QpProblem, max_iter: int = MAX_ITER) -> QpSolution:
    if qp.weights.h_v + qp.weights.p_v <= 0 or qp.weights.h_omega <= 0 or qp.weights.p_omega <= 0:
        raise ValueError("cost must be positive definite in (v, omega, delta_omega)")
    g, a, c_raw, d_raw, names, norms, scale = _scaled(qp)

    # zero rows are either void or contradictory
    keep = norms > 1e-14
    if np.any(~keep & (d_raw > FEAS_TOL)):
        bad = names[int(np.argmax(~keep & (d_raw > FEAS_TOL)))]
        return _failed(qp, INFEASIBLE, np.zeros(3), 0, f"row {bad} reads 0 >= positive")
    idx = np.flatnonzero(keep)
    c = c_raw[idx] / norms[idx, None]
    d = d_raw[idx] / norms[idx]

    ginv = 1.0 / g
    z = -ginv * a
    active: list[int] = []
    u = np.zeros(0)
    it = 0
    while True:
        s = c @ z - d
        s[active] = np.inf
        p = int(np.argmin(s))
        if s[p] >= -FEAS_TOL * 1e-3:
            break
        n_p = c[p]
        u_plus = np.append(u, 0.0)
        while True:
            it += 1
            if it > max_iter:
                return _finish(qp, MAX_ITER_REACHED, z, active, u_plus[:-1], idx, names, norms, scale, g, a, c, d, it)
            if active:
                n_mat = c[active].T
                gin = ginv[:, None] * n_mat
                if _dependent(n_mat, n_p):
                    # no primal step; r expresses n_p in the active normals
                    r = np.linalg.lstsq(n_mat, n_p, rcond=None)[0]
                    step = np.zeros_like(z)
                else:
                    n_star = np.linalg.solve(n_mat.T @ gin, gin.T)
                    step = ginv * n_p - gin @ (n_star @ n_p)
                    r = n_star @ n_p
            else:
                step = ginv * n_p
                r = np.zeros(0)
            t1, k = np.inf, -1
            for j, rj in enumerate(r):
                if rj > 1e-12:
                    tj = u_plus[j] / rj
                    if tj < t1:
                        t1, k = tj, j
            curv = float(step @ n_p)
            t2 = -(float(n_p @ z) - d[p]) / curv if curv > 1e-14 else np.inf
            if not np.isfinite(t1) and not np.isfinite(t2):
                return _failed(qp, INFEASIBLE, z, it, f"row {names[idx[p]]} cannot be satisfied")
            t = min(t1, t2)
            if np.isfinite(t2):
                z = z + t * step
            u_plus[:-1] -= t * r
            u_plus[-1] += t
            if t2 <= t1:
                active.append(p)
                u = u_plus
                break
            del active[k]
            u_plus = np.delete(u_plus, k)
    if active:
        z, u = _refine(z, u, active, ginv, a, c, d)
    return _finish(qp, OPTIMAL, z, active, u, idx, names, norms, scale, g, a, c, d, it)


def _dependent(n_mat: np.ndarray, n_p: np.ndarray) -> bool:
    """Is the unit row ``n_p`` in the span of the (unit) active normals?"""
    if n_mat.shape[1] >= n_mat.shape[0]:
        return True
    sv = np.linalg.svd(np.column_stack([n_mat, n_p]), compute_uv=False)
    return sv[-1] <= DEP_TOL


def _refine(z, u, active, ginv, a, c, d):
    """Re-solve the KKT system of the final active set in one shot.

    The incremental updates leave round-off of order cond * eps on the active
    rows; a direct solve of the full KKT matrix removes it.  Kept only if it
    stays dual feasible.
    """
    n_mat = c[active].T
    n, m = len(z), len(active)
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = np.diag(1.0 / ginv)
    kkt[:n, n:] = -n_mat
    kkt[n:, :n] = n_mat.T
    try:
        sol = np.linalg.solve(kkt, np.concatenate([-a, d[active]]))
    except np.linalg.LinAlgError:
        return z, u
    if not np.all(np.isfinite(sol)) or np.any(sol[n:] < 0.0):
        return z, u
    return sol[:n], sol[n:]


def _finish(qp, status, z, active, u, idx, names, norms, scale, g, a, c, d, it) -> QpSolution:
    mu = np.zeros(len(idx))
    mu[active] = u
    res = kkt_residual(g, a, c, d, z, mu)
    act = [names[idx[j]] for j in active]
    mult = {names[idx[j]]: float(uj * scale / norms[idx[j]]) for j, uj in zip(active, u)}
    v, om, dl = (float(x) for x in z)
    return QpSolution(status, v, om, dl, qp.v_ref - v, qp.objective(v, om, dl), act, mult, res, it)


def _failed(qp, status, z, it, reason) -> QpSolution:
    log.debug("qp %s: %s", status, reason)
    v, om, dl = (float(x) for x in z)
    return QpSolution(status, v, om, dl, qp.v_ref - v, qp.objective(v, om, dl), [], {}, np.inf, it)


@dataclass
class OracleResult:
    feasible: bool
    v: float = float("nan")
    omega: float = float("nan")
    delta_omega: float = float("nan")
    objective: float = float("inf")


def brute_force_oracle(qp: QpProblem, resolution: int = 1001, tol: float = 1e-9) -> OracleResult:
    """Exhaustive (v, omega) grid; delta_omega takes its smallest admissible magnitude."""
    b = qp.bounds
    vs = np.linspace(b.v_min, b.v_max, resolution)
    ws = np.linspace(b.omega_min, b.omega_max, resolution)
    vv, ww = np.meshgrid(vs, ws, indexing="ij")
    ok = np.ones_like(vv, dtype=bool)
    lo = np.full_like(vv, -np.inf)
    hi = np.full_like(vv, np.inf)
    for r in qp.rows:
        lhs = r.a_v * vv + r.a_omega * ww - r.rhs
        slack_tol = tol * max(1.0, abs(r.a_v), abs(r.a_omega), abs(r.rhs))
        if r.a_delta_omega > 0:
            np.maximum(lo, -lhs / r.a_delta_omega, out=lo)
        elif r.a_delta_omega < 0:
            np.minimum(hi, -lhs / r.a_delta_omega, out=hi)
        else:
            ok &= lhs >= -slack_tol
    ok &= lo <= hi
    if not ok.any():
        return OracleResult(False)
    delta = np.clip(0.0, lo, hi)
    w = qp.weights
    cost = w.h_v * vv**2 + w.h_omega * ww**2 + w.p_v * (qp.v_ref - vv) ** 2 + w.p_omega * delta**2
    cost = np.where(ok, cost, np.inf)
    i = np.unravel_index(int(np.argmin(cost)), cost.shape)
    return OracleResult(True, float(vv[i]), float(ww[i]), float(delta[i]), float(cost[i]))


# --------------------------------------------------------------------------
# controller


def assemble(
    frame: NeighborFrame,
    v_ref: float,
    y_ref: float,
    geometry: LaneGeometry,
    params: ControllerParams,
    period: float | None = None,
) -> QpProblem:
    if params.sampled_speed and period is None:
        raise ValueError("sampled_speed needs the control period")
    evals = barrier_rows(frame, geometry, params.coordination, params.gains, period if params.sampled_speed else None)
    v_row, v_val, eta0 = lyapunov_row(frame, y_ref, params.gains)
    rows = tuple(e.row for e in evals) + (v_row,)
    return QpProblem(params.weights, v_ref, rows, params.bounds, tuple(evals), v_val, eta0)


@dataclass
class ControlResult:
    input: ControlInput
    problem: QpProblem
    solution: QpSolution
    fallback: bool
    events: list[str]
    wall_time: float


def control_step(frame, v_ref, y_ref, geometry, params: ControllerParams, period: float | None = None) -> ControlResult:
    t0 = time.perf_counter()
    qp = assemble(frame, v_ref, y_ref, geometry, params, period)
    sol = solve(qp)
    events = []
    if sol.optimal:
        u = ControlInput(sol.v, sol.omega)
        fallback = False
    else:
        u = ControlInput(params.bounds.v_min, 0.0)
        fallback = True
        events.append(f"qp {sol.status}: emergency fallback v={u.v}, omega=0")
        log.warning("qp %s, applying fallback (v_min, 0)", sol.status)
    return ControlResult(u, qp, sol, fallback, events, time.perf_counter() - t0)
