"""Reproduction-quality metrics for demonstrated vs generated motion.

Shape preservation is measured by the swept error area: the summed area of
the tetragons spanned by corresponding segments of the two paths, after
resampling the reproduction to the demonstration's sample count at equal
arc-length spacing. Kinematics preservation is the RMS difference between
demonstrated velocities and the learned field at the demonstrated
positions. Motion sets are summarized by median and 10/90% quantiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .reshaper import Demonstration, ReshapedSystem
from .systems import DynamicalSystem


def resample_equidistant(points, count: int) -> np.ndarray:
    """Resample a piecewise-linear path to `count` points at equal arc length.

    Endpoints are preserved exactly. Raises on zero-length paths.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise ValueError("path needs at least 2 points")
    if count < 2:
        raise ValueError("count must be >= 2")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = float(seg.sum())
    if total == 0.0:
        raise ValueError("zero-length path cannot be resampled")
    # Collapse zero-length segments so arc length is strictly increasing.
    keep = np.concatenate([[True], seg > 0])
    pts = pts[keep]
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    targets = np.linspace(0.0, total, count)
    out = np.empty((count, pts.shape[1]))
    for j in range(pts.shape[1]):
        out[:, j] = np.interp(targets, arc, pts[:, j])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def _triangle_area(a, b, c) -> float:
    ab, ac = b - a, c - a
    if a.size == 2:
        return 0.5 * abs(ab[0] * ac[1] - ab[1] * ac[0])
    return 0.5 * float(np.linalg.norm(np.cross(ab, ac)))


def swept_error_area(reproduced, demonstrated) -> float:
    """Summed tetragon area between corresponding path segments.

    Both paths must have equal length (resample first). Each tetragon
    (e_t, e_{t+1}, d_{t+1}, d_t) is split into two triangles with
    absolute areas, which also covers self-intersecting tetragons; the
    two possible diagonal splits are averaged so the metric is exactly
    symmetric in its arguments (they coincide for convex tetragons).
    Supported in 2 or 3 dimensions.
    """
    rep = np.atleast_2d(np.asarray(reproduced, dtype=float))
    dem = np.atleast_2d(np.asarray(demonstrated, dtype=float))
    if rep.shape != dem.shape:
        raise ValueError(f"paths differ in shape: {rep.shape} vs {dem.shape}")
    if rep.shape[1] not in (2, 3):
        raise ValueError("swept error area is defined for 2-D or 3-D paths; "
                         "use velocity_rmse and pointwise errors above 3-D")
    total = 0.0
    for t in range(rep.shape[0] - 1):
        e0, e1 = rep[t], rep[t + 1]
        d0, d1 = dem[t], dem[t + 1]
        split_a = _triangle_area(e0, e1, d1) + _triangle_area(e0, d1, d0)
        split_b = _triangle_area(d0, d1, e1) + _triangle_area(d0, e1, e0)
        total += 0.5 * (split_a + split_b)
    return total


def velocity_rmse(demo: Demonstration, system) -> float:
    """RMS norm of (demonstrated velocity - field at demonstrated position).

    `system` may be a DynamicalSystem, a ReshapedSystem (evaluated with the
    gate fully open, s = 1) or a bare state-to-vector callable.
    """
    if isinstance(system, ReshapedSystem):
        fn = lambda x: system.reshaped_field(x, 1.0)
    elif isinstance(system, DynamicalSystem):
        fn = system.evaluate
    else:
        fn = system
    err = np.array([demo.vel[k] - np.asarray(fn(demo.pos[k]), dtype=float)
                    for k in range(len(demo))])
    return float(np.sqrt(np.mean(np.sum(err ** 2, axis=1))))


class QuantileSummary(NamedTuple):
    median: float
    q10: float
    q90: float


def quantile_summary(values) -> QuantileSummary:
    """Median and 10/90% quantiles with linear interpolation."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("cannot summarize an empty value list")
    q10, med, q90 = np.quantile(vals, [0.10, 0.50, 0.90], method="linear")
    return QuantileSummary(float(med), float(q10), float(q90))


@dataclass
class MetricRow:
    motion: str
    demo: str
    sea: float | None = None
    v_rmse: float | None = None

    def to_dict(self):
        return {"motion": self.motion, "demo": self.demo,
                "sea": self.sea, "v_rmse": self.v_rmse}


@dataclass
class MetricReport:
    """Per-demonstration metric rows plus quantile summaries."""

    rows: list = field(default_factory=list)
    sea_unit: str = ""
    v_unit: str = ""

    def add(self, motion, demo, sea=None, v_rmse=None):
        self.rows.append(MetricRow(motion, demo, sea, v_rmse))

    def _values(self, attr):
        return [getattr(r, attr) for r in self.rows if getattr(r, attr) is not None]

    def sea_summary(self) -> QuantileSummary | None:
        vals = self._values("sea")
        return quantile_summary(vals) if vals else None

    def vrmse_summary(self) -> QuantileSummary | None:
        vals = self._values("v_rmse")
        return quantile_summary(vals) if vals else None

    def to_dict(self) -> dict:
        out = {"rows": [r.to_dict() for r in self.rows]}
        sea = self.sea_summary()
        vr = self.vrmse_summary()
        out["sea"] = dict(sea._asdict()) if sea else None
        out["v_rmse"] = dict(vr._asdict()) if vr else None
        return out

    def to_table(self, label: str = "reshaped") -> str:
        """Aligned summary table: one metric column per available metric,
        each cell formatted as median / Q10 / Q90."""
        def fmt(s: QuantileSummary | None):
            if s is None:
                return "-"
            return f"{s.median:.3g} / {s.q10:.3g} / {s.q90:.3g}"

        sea_head = f"SEA{f' [{self.sea_unit}]' if self.sea_unit else ''} (Me / Q10 / Q90)"
        v_head = f"V_rmse{f' [{self.v_unit}]' if self.v_unit else ''} (Me / Q10 / Q90)"
        rows = [
            ("method", sea_head, v_head),
            (label, fmt(self.sea_summary()), fmt(self.vrmse_summary())),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def per_motion_table(self) -> str:
        """Aligned per-row breakdown (motion, demo, sea, v_rmse)."""
        header = ("motion", "demo", "sea", "v_rmse")
        body = [(r.motion, r.demo,
                 "-" if r.sea is None else f"{r.sea:.6g}",
                 "-" if r.v_rmse is None else f"{r.v_rmse:.6g}")
                for r in self.rows]
        rows = [header] + body
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
