"""Static SVG rendering of a trajectory log.

Pure rendering: nothing here reads or writes simulation state.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from .perception import LaneGeometry  # noqa: E402
from .simulator import BARRIER_NAMES, TrajectoryLog  # noqa: E402

CAR_LENGTH = 4.5
CAR_WIDTH = 1.8
SHADOW_TIMES = tuple(float(t) for t in range(7))  # outlines at t = 0..6 s
BARRIER_CLIP = 30.0  # mock neighbours sit at the sensor range; clip the panel


def infer_geometry(log: TrajectoryLog) -> LaneGeometry:
    """Lane width from y_ref = lane * w, lane count from the lanes seen."""
    widths = [r.y_ref / r.target_lane for r in log.records if r.target_lane > 0]
    w = widths[0] if widths else LaneGeometry().lane_width
    lanes = max([r.lane for r in log.records] + [r.target_lane for r in log.records] + [2])
    return LaneGeometry(lane_width=w, lane_count=lanes)


def _outline(x: float, y: float, psi: float) -> list[tuple[float, float]]:
    c, s = math.cos(psi), math.sin(psi)
    hl, hw = CAR_LENGTH / 2, CAR_WIDTH / 2
    return [(x + c * dx - s * dy, y + s * dx + c * dy) for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))]


def _at_times(recs, times):
    out = []
    for t in times:
        best = min(recs, key=lambda r: abs(r.time - t))
        if abs(best.time - t) < 1e-6:
            out.append(best)
    return out


def plot_log(log: TrajectoryLog, path: str | Path, geometry: LaneGeometry | None = None) -> Path:
    geometry = geometry or infer_geometry(log)
    path = Path(path)
    names = log.vehicles()
    colors = plt.get_cmap("tab10")
    fig, (top, bars) = plt.subplots(2, 1, figsize=(11, 7), gridspec_kw={"height_ratios": [1, 1.3]})

    w = geometry.lane_width
    t_end = SHADOW_TIMES[-1] + 0.5
    xs = [r.x for r in log.records if r.time <= t_end]
    x_lo, x_hi = min(xs) - CAR_LENGTH, max(xs) + CAR_LENGTH
    for k in range(geometry.lane_count + 1):
        y = (k + 0.5) * w
        style = "-" if k in (0, geometry.lane_count) else "--"
        top.plot([x_lo, x_hi], [y, y], style, color="0.4", lw=1)
    for i, name in enumerate(names):
        recs = log.of(name)
        col = colors(i % 10)
        window = [r for r in recs if r.time <= t_end]
        top.plot([r.x for r in window], [r.y for r in window], color=col, lw=0.8, label=name)
        shadows = _at_times(recs, SHADOW_TIMES)
        for j, r in enumerate(shadows):
            alpha = 0.15 + 0.75 * (j + 1) / len(shadows)
            top.add_patch(Polygon(_outline(r.x, r.y, r.psi), closed=True, fc=col, ec="k", lw=0.4, alpha=alpha))
    top.set_xlim(x_lo, x_hi)
    top.set_ylim(0.5 * w - 0.5, (geometry.lane_count + 0.5) * w + 0.5)
    top.set_xlabel("x [m]")
    top.set_ylabel("y [m]")
    top.set_title(f"{log.scenario}: outlines at t = 0..6 s (darker is later)")
    top.legend(loc="upper left", fontsize=8)

    styles = ["-", "--", ":", "-."]
    for i, name in enumerate(names):
        recs = log.of(name)
        ts = [r.time for r in recs]
        for j, b in enumerate(BARRIER_NAMES):
            vals = [min(r.barriers[b], BARRIER_CLIP) for r in recs]
            if min(vals) >= BARRIER_CLIP:
                continue
            bars.plot(ts, vals, styles[j % 4], color=colors(i % 10), lw=0.9, label=f"{name} {b}")
    bars.axhline(0.0, color="r", lw=0.8)
    bars.set_xlabel("t [s]")
    bars.set_ylabel(f"b_k [m] (clipped at {BARRIER_CLIP:g})")
    bars.legend(loc="upper right", fontsize=7, ncol=3)
    fig.tight_layout()
    # fixed hash salt and no date keep the SVG reproducible
    with matplotlib.rc_context({"svg.hashsalt": "lanecoord"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
