"""Coordination functions coupling longitudinal gaps and lateral offsets.

``theta`` measures a gap as a fraction of a safety distance and ``lambda_``
maps it to a fraction of the lane width a vehicle may use.  ``rho`` measures
a lateral offset in lane widths and ``sigma`` maps it to the fraction of the
safety distance that must be kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

LINEAR_END = 0.9
CUBIC_END = 1.0
LINEAR_SLOPE = 0.5 / 0.9


class DomainError(ValueError):
    """Raised when a coordination function is evaluated outside its domain."""


@dataclass(frozen=True)
class LambdaParams:
    a1: float = 234.14
    a2: float = -0.872
    a3: float = 0.4949
    beta1: float = 1209.2
    beta2: float = -0.9962
    beta3: float = 0.01


@dataclass(frozen=True)
class SigmaParams:
    s1: float = 1.03
    s2: float = 16.0
    s3: float = 0.64
    s4: float = 0.02


@dataclass(frozen=True)
class CoordinationConfig:
    tau_d: float = 0.9
    lambda_: LambdaParams = field(default_factory=LambdaParams)
    sigma: SigmaParams = field(default_factory=SigmaParams)
    continuity_tol: float = 0.02


def theta(x1: float, x2: float, v2: float, tau_d: float) -> float:
    """Gap ``x1 - x2`` as a fraction of the safety distance ``tau_d * v2``."""
    if not v2 > 0.0:
        raise DomainError(f"theta needs a positive speed, got v2={v2!r}")
    if x1 < x2:
        raise DomainError(f"theta needs x1 >= x2, got x1={x1!r} < x2={x2!r}")
    return (x1 - x2) / (tau_d * v2)


def _logistic(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def lambda_(th: float, p: LambdaParams) -> float:
    if th < 0.0:
        raise DomainError(f"lambda needs theta >= 0, got {th!r}")
    if th <= LINEAR_END:
        return LINEAR_SLOPE * th
    if th <= CUBIC_END:
        return p.a1 * (th + p.a2) ** 3 + p.a3
    return _logistic(p.beta1 * (th + p.beta2)) + p.beta3


def lambda_prime(th: float, p: LambdaParams) -> float:
    # breakpoints take the left branch, like the value
    if th <= LINEAR_END:
        return LINEAR_SLOPE
    if th <= CUBIC_END:
        return 3.0 * p.a1 * (th + p.a2) ** 2
    s = _logistic(p.beta1 * (th + p.beta2))
    return p.beta1 * s * (1.0 - s)


def lambda_second(th: float, p: LambdaParams) -> float:
    if th <= LINEAR_END:
        return 0.0
    if th <= CUBIC_END:
        return 6.0 * p.a1 * (th + p.a2)
    s = _logistic(p.beta1 * (th + p.beta2))
    return p.beta1**2 * s * (1.0 - s) * (1.0 - 2.0 * s)


def rho(y1: float, y2: float, w: float) -> float:
    """Lateral offset ``y1 - y2`` in lane widths."""
    if y1 < y2:
        raise DomainError(f"rho needs y1 >= y2, got y1={y1!r} < y2={y2!r}")
    return (y1 - y2) / w


def sigma(r: float, p: SigmaParams) -> float:
    return p.s1 * _logistic(-p.s2 * (r - p.s3)) - p.s4


def sigma_prime(r: float, p: SigmaParams) -> float:
    s = _logistic(-p.s2 * (r - p.s3))
    return -p.s1 * p.s2 * s * (1.0 - s)


def sigma_second(r: float, p: SigmaParams) -> float:
    s = _logistic(-p.s2 * (r - p.s3))
    return p.s1 * p.s2**2 * s * (1.0 - s) * (1.0 - 2.0 * s)


# --------------------------------------------------------------------------
# parameter validation

PASS, WARN, FAIL = "pass", "warn", "fail"


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str
    witness: float | None = None
    value: float | None = None

    def line(self) -> str:
        where = "" if self.witness is None else f" (at {self.witness:.6g}: {self.value:.6g})"
        return f"[{self.status.upper():4s}] {self.name}: {self.detail}{where}"


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    @property
    def warnings(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == WARN]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _grid(lo: float, hi: float, n: int = 2001, open_left: bool = False) -> np.ndarray:
    g = np.linspace(lo, hi, n)
    return g[1:] if open_left else g


def _monotone_check(name, xs, ys, increasing, desc) -> CheckResult:
    dy = np.diff(ys)
    # increasing: nondecreasing up to rounding; decreasing: strict
    bad = dy < -1e-12 if increasing else dy >= 0.0
    if np.any(bad):
        i = int(np.argmax(bad))
        return CheckResult(name, FAIL, f"not {desc}", float(xs[i + 1]), float(dy[i]))
    return CheckResult(name, PASS, desc)


def _bound_check(name, xs, ys, lo, hi, desc, soft_lo=None, soft_hi=None) -> CheckResult:
    """Hard bounds [soft_lo, soft_hi] fail, tighter [lo, hi] only warn."""
    soft_lo = lo if soft_lo is None else soft_lo
    soft_hi = hi if soft_hi is None else soft_hi
    excess = np.maximum(lo - ys, ys - hi)
    hard = np.maximum(soft_lo - ys, ys - soft_hi)
    i = int(np.argmax(excess))
    if hard.max() > 0.0:
        j = int(np.argmax(hard))
        return CheckResult(name, FAIL, desc, float(xs[j]), float(ys[j]))
    if excess[i] > 0.0:
        return CheckResult(name, WARN, desc + " (within continuity_tol)", float(xs[i]), float(ys[i]))
    return CheckResult(name, PASS, desc)


def validate(config: CoordinationConfig) -> ValidationReport:
    lp, sp, tol = config.lambda_, config.sigma, config.continuity_tol
    lam = np.vectorize(lambda t: lambda_(t, lp))
    sig = np.vectorize(lambda r: sigma(r, sp))
    checks: list[CheckResult] = []

    checks.append(CheckResult("tau_d_positive", PASS if config.tau_d > 0 else FAIL, f"tau_d = {config.tau_d}"))
    signs = lp.a1 > 0 and lp.a2 < 0 and lp.a3 > 0 and lp.beta1 > 0 and lp.beta2 < 0 and lp.beta3 > 0
    checks.append(CheckResult("lambda_param_signs", PASS if signs else FAIL, "a1,a3,beta1,beta3 > 0 and a2,beta2 < 0"))
    ssigns = min(sp.s1, sp.s2, sp.s3, sp.s4) > 0
    checks.append(CheckResult("sigma_param_signs", PASS if ssigns else FAIL, "s1..s4 > 0"))

    l0 = lambda_(0.0, lp)
    checks.append(CheckResult("lambda_zero", PASS if l0 == 0.0 else FAIL, "lambda(0) = 0", 0.0, l0))
    l09 = lambda_(LINEAR_END, lp)
    checks.append(
        CheckResult("lambda_half", PASS if abs(l09 - 0.5) <= 1e-9 else FAIL, "lambda(0.9) = 0.5", LINEAR_END, l09)
    )

    branches = [_grid(0.0, LINEAR_END), _grid(LINEAR_END, CUBIC_END, open_left=True), _grid(CUBIC_END, 3.0, open_left=True)]
    th = np.concatenate(branches)
    checks.append(_monotone_check("lambda_monotone", th, lam(th), True, "nondecreasing on [0, 3]"))

    sat = np.concatenate([[CUBIC_END], branches[2]])
    checks.append(
        _bound_check(
            "lambda_saturation", sat, lam(sat), 1.0, 1.01,
            "1 <= lambda <= 1.01 for theta >= 1", 1.0 - tol, 1.01 + tol,
        )
    )
    for at in (LINEAR_END, CUBIC_END):
        left = lambda_(at, lp)
        right = lambda_(math.nextafter(at, math.inf), lp)
        gap = abs(right - left)
        status = PASS if gap <= 1e-6 else (WARN if gap <= tol else FAIL)
        checks.append(CheckResult(f"lambda_continuity@{at:g}", status, f"branch jump {gap:.4g} (tol {tol:g})", at, gap))

    rr = _grid(0.0, 1.5)
    checks.append(_monotone_check("sigma_decreasing", rr, sig(rr), False, "strictly decreasing on [0, 1.5]"))
    far = _grid(0.9, 3.0)
    checks.append(_bound_check("sigma_far", far, sig(far), -np.inf, 0.0, "sigma <= 0 for rho >= 0.9"))
    mid = _grid(0.0, 0.5)
    checks.append(_bound_check("sigma_mid", mid, sig(mid), 0.9, np.inf, "sigma >= 0.9 for rho <= 0.5"))
    near = _grid(0.0, 0.3)
    checks.append(_bound_check("sigma_near", near, sig(near), 1.0, 1.01, "1 <= sigma <= 1.01 for rho <= 0.3"))
    return ValidationReport(checks)


def refit_cubic(p: LambdaParams) -> LambdaParams:
    """Re-solve (a1, a2, a3) so the cubic branch joins both neighbours.

    Value continuity is enforced at both breakpoints and slope continuity at
    theta = 0.9; the slope mismatch left at theta = 1 is small.
    """
    target = lambda_(math.nextafter(CUBIC_END, math.inf), p) - 0.5
    width = CUBIC_END - LINEAR_END

    def residual(u0: float) -> float:
        a1 = LINEAR_SLOPE / (3.0 * u0**2)
        return a1 * ((u0 + width) ** 3 - u0**3) - target

    u0 = brentq(residual, 1e-6, 10.0, xtol=1e-15)
    a1 = LINEAR_SLOPE / (3.0 * u0**2)
    a2 = u0 - LINEAR_END
    a3 = 0.5 - a1 * u0**3
    return LambdaParams(a1, a2, a3, p.beta1, p.beta2, p.beta3)


def _logit(q: float) -> float:
    return math.log(q / (1.0 - q))


def refit_sigma(p: SigmaParams, rho_mid: float = 0.5, rho_far: float = 0.9) -> SigmaParams:
    """Re-solve (s2, s3) so that sigma(rho_mid) = 1 and sigma(rho_far) = 0.

    A neighbour crossing the lane midline (rho = 1/2 against a vehicle on its
    centre line) is reclassified from a side slot to the same-lane slot, which
    swaps a b6/b7 term ``tau * v * sigma(1/2)`` for b1's ``tau * v``.  With
    sigma(1/2) = 1 that swap is continuous.  s1 and s4 are kept.
    """
    if not p.s1 > 1.0 + p.s4:
        raise DomainError("need s1 > 1 + s4 for sigma to reach 1")
    hi, lo = _logit((1.0 + p.s4) / p.s1), _logit(p.s4 / p.s1)
    s2 = (hi - lo) / (rho_far - rho_mid)
    s3 = rho_mid + hi / s2
    return SigmaParams(p.s1, s2, s3, p.s4)
