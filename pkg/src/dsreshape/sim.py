"""Fixed-step rollout of reshaped systems, perturbations and stability probes.

Positions advance with Euler or RK4 at a fixed dt; the clock state is
advanced with its exact exponential solution, so integration error lives
only in x. Perturbation events can freeze the state (hold-and-release)
or teleport it, and trajectories can be scanned for stalls, i.e. spells
where the velocity vanishes away from the goal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gp import NumericalError
from .reshaper import ReshapedSystem, clock_step
from .systems import DynamicalSystem, NonFiniteInputError, as_state

GOAL_REACHED = "goal_reached"
MAX_TIME = "max_time"
STALL_ESCAPED = "stall_escaped"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class Hold:
    """Freeze the state for `duration` seconds starting at `t_start`.

    Time and the clock keep advancing, so releasing the state probes that
    the control depends on position only.
    """

    t_start: float
    duration: float


@dataclass(frozen=True)
class SetState:
    """Teleport the state to `x` at time `t`."""

    t: float
    x: tuple


@dataclass
class RolloutConfig:
    dt: float = 0.005
    max_time: float = 10.0
    goal_tolerance: float = 1e-3
    integrator: str = "rk4"
    perturbations: tuple = ()
    # Optional escape from spurious attractors: while t <= t_f, a stalled
    # state gets a small velocity toward the goal. Off by default; it is a
    # mitigation, not part of the reshaping scheme.
    escape_eps: float = 0.0
    escape_speed_eps: float = 1e-3

    def __post_init__(self):
        if self.dt <= 0 or self.dt > self.max_time:
            raise ValueError(f"need 0 < dt <= max_time, got dt={self.dt}")
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be positive")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


def default_goal_tolerance(demo_bbox_diagonal: float) -> float:
    return 1e-3 * demo_bbox_diagonal


@dataclass
class Trajectory:
    """Rollout samples (t, x, xdot, s) plus the termination reason.

    terminated_by is one of goal_reached, max_time, stall_escaped (goal
    reached, but only after the optional escape nudge fired) or
    numerical_failure (last valid sample retained).
    """

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    s: np.ndarray
    terminated_by: str
    goal: np.ndarray
    goal_tolerance: float

    def __len__(self):
        return self.t.size

    @property
    def dimension(self):
        return self.x.shape[1]

    @property
    def final_state(self):
        return self.x[-1].copy()

    def goal_error(self) -> float:
        return float(np.linalg.norm(self.x[-1] - self.goal))

    def position_at(self, times) -> np.ndarray:
        """Linear interpolation of the path at the given times."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.dimension))
        for j in range(self.dimension):
            out[:, j] = np.interp(times, self.t, self.x[:, j])
        return out

    def to_csv(self, path=None) -> str | None:
        """Write `t,x1..xn,v1..vn,s` rows; returns the text when path is None."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.dimension
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)]
                   + [f"v{i + 1}" for i in range(n)] + ["s"])
        for k in range(len(self)):
            w.writerow([repr(float(self.t[k]))]
                       + [repr(float(v)) for v in self.x[k]]
                       + [repr(float(v)) for v in self.xdot[k]]
                       + [repr(float(self.s[k]))])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None

    def to_dict(self) -> dict:
        return {
            "t": self.t.tolist(),
            "x": self.x.tolist(),
            "xdot": self.xdot.tolist(),
            "s": self.s.tolist(),
            "terminated_by": self.terminated_by,
            "goal": self.goal.tolist(),
            "goal_tolerance": self.goal_tolerance,
        }


def _euler_step(f, x, t, dt, s0, s_of):
    return x + dt * f(x, s0)


def _rk4_step(f, x, t, dt, s0, s_of):
    s_half = s_of(dt / 2.0)
    s_full = s_of(dt)
    k1 = f(x, s0)
    k2 = f(x + 0.5 * dt * k1, s_half)
    k3 = f(x + 0.5 * dt * k2, s_half)
    k4 = f(x + dt * k3, s_full)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}


def rollout(rs: ReshapedSystem, x0, cfg: RolloutConfig) -> Trajectory:
    """Integrate the reshaped dynamics from x0 until goal, timeout or failure.

    The clock starts at s = 1 and follows its analytic solution. During a
    hold event the state is frozen and the recorded velocity is zero while
    t and s keep advancing. Encountering a non-finite state stops the
    rollout at the last valid sample.
    """
    x = as_state(x0, rs.dimension)
    goal = rs.goal
    clock = rs.clock
    stepper = _STEPPERS[cfg.integrator]
    holds = sorted((p for p in cfg.perturbations if isinstance(p, Hold)),
                   key=lambda h: h.t_start)
    jumps = sorted((p for p in cfg.perturbations if isinstance(p, SetState)),
                   key=lambda p: p.t)
    pending_jumps = list(jumps)

    def fld(xx, ss):
        return rs.reshaped_field(xx, ss)

    ts, xs, vs, ss_ = [], [], [], []
    t, s = 0.0, 1.0
    escaped = False
    escaping = False
    reason = MAX_TIME
    # Steps are time-grid aligned; ending strictly inside the last dt-step
    # is not needed at teaching cadence.
    n_steps = int(round(cfg.max_time / cfg.dt))
    step_count = 0
    while True:
        while pending_jumps and t >= pending_jumps[0].t - 1e-12:
            x = as_state(pending_jumps.pop(0).x, rs.dimension)
        holding = any(h.t_start - 1e-12 <= t < h.t_start + h.duration - 1e-12
                      for h in holds)
        step_field = fld
        if holding:
            xdot = np.zeros(rs.dimension)
        else:
            xdot = fld(x, s)
            if cfg.escape_eps > 0 and t <= clock.t_f:
                # Hysteresis: the nudge stays on from stall onset until the
                # field speed recovers well past the detection threshold.
                speed = float(np.linalg.norm(xdot))
                dist = float(np.linalg.norm(goal - x))
                if speed < cfg.escape_speed_eps and dist > cfg.goal_tolerance:
                    escaping = True
                elif speed >= 10.0 * cfg.escape_speed_eps or dist <= cfg.goal_tolerance:
                    escaping = False
                if escaping:
                    nudge = cfg.escape_eps * (goal - x) / dist
                    xdot = xdot + nudge

                    def step_field(xx, ss, _n=nudge):
                        return fld(xx, ss) + _n
                    escaped = True
        ts.append(t)
        xs.append(x.copy())
        vs.append(xdot)
        ss_.append(s)
        if float(np.linalg.norm(x - goal)) < cfg.goal_tolerance:
            reason = STALL_ESCAPED if escaped else GOAL_REACHED
            break
        if step_count >= n_steps:
            reason = MAX_TIME
            break
        if not holding:
            def s_of(tau, _t=t, _s=s):
                return clock_step(_s, _t, clock, tau)
            try:
                x_next = stepper(step_field, x, t, cfg.dt, s, s_of)
            except (NonFiniteInputError, NumericalError):
                reason = NUMERICAL_FAILURE
                break
            if not np.all(np.isfinite(x_next)):
                reason = NUMERICAL_FAILURE
                break
            x = x_next
        s = clock_step(s, t, clock, cfg.dt)
        t = round((step_count + 1) * cfg.dt, 12)
        step_count += 1

    return Trajectory(
        t=np.array(ts), x=np.array(xs), xdot=np.array(vs), s=np.array(ss_),
        terminated_by=reason, goal=goal.copy(), goal_tolerance=cfg.goal_tolerance,
    )


@dataclass
class FieldGrid:
    """Field samples on an axis-aligned grid, row-major (last axis fastest)."""

    bounds: np.ndarray       # (n, 2)
    resolution: tuple        # per-axis counts
    points: np.ndarray       # (N, n)
    vectors: np.ndarray      # (N, n)
    s: float

    def to_dict(self) -> dict:
        return {
            "bounds": self.bounds.tolist(),
            "resolution": list(self.resolution),
            "s": self.s,
            "vectors": self.vectors.tolist(),
        }


def vector_field_grid(rs: ReshapedSystem, s: float, bounds, resolution) -> FieldGrid:
    """Sample f(x) + s*u(x) on a 2-D or 3-D grid for display export."""
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    n = bounds.shape[0]
    if n != rs.dimension:
        raise ValueError(f"bounds cover {n} axes, system has {rs.dimension}")
    if n not in (2, 3):
        raise ValueError(f"grid export supports 2 or 3 dimensions, not {n}")
    resolution = tuple(int(r) for r in np.atleast_1d(resolution))
    if len(resolution) == 1:
        resolution = resolution * n
    if len(resolution) != n or any(r < 2 for r in resolution):
        raise ValueError(f"need >= 2 samples per axis, got {resolution}")
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(bounds, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel(order="C") for m in mesh], axis=1)
    vectors = np.array([rs.reshaped_field(p, s) for p in points])
    return FieldGrid(bounds=bounds, resolution=resolution, points=points,
                     vectors=vectors, s=s)


class StallInterval(NamedTuple):
    t_enter: float
    t_exit: float
    x_stall: np.ndarray


def detect_stall(traj: Trajectory, speed_eps: float, window: float):
    """Maximal intervals where the velocity vanishes away from the goal.

    A sample is stalled when its speed is below `speed_eps` while the
    state is outside the goal tolerance; runs shorter than `window`
    seconds are discarded. Returns a list of (t_enter, t_exit, x_stall)
    with x_stall the mean position over the interval.
    """
    if len(traj) < 2:
        raise ValueError("trajectory needs at least 2 samples")
    speed = np.linalg.norm(traj.xdot, axis=1)
    offgoal = np.linalg.norm(traj.x - traj.goal, axis=1) > traj.goal_tolerance
    stalled = (speed < speed_eps) & offgoal
    intervals = []
    k = 0
    T = len(traj)
    while k < T:
        if not stalled[k]:
            k += 1
            continue
        j = k
        while j + 1 < T and stalled[j + 1]:
            j += 1
        if traj.t[j] - traj.t[k] >= window:
            intervals.append(StallInterval(
                float(traj.t[k]), float(traj.t[j]),
                traj.x[k:j + 1].mean(axis=0),
            ))
        k = j + 1
    return intervals


class LyapunovCheck(NamedTuple):
    violations: int
    samples: int
    worst_x: np.ndarray
    worst_vdot: float


def lyapunov_decrease_check(ds: DynamicalSystem, V, samples: int, region,
                            seed: int = 0) -> LyapunovCheck:
    """Sample V̇ = ∇V·f over a box and count non-decreasing points.

    The gradient is taken by central differences. Points inside a tiny
    ball around the goal are skipped, since V̇ -> 0 there by construction.
    """
    region = np.asarray(region, dtype=float).reshape(-1, 2)
    if region.shape[0] != ds.dimension:
        raise ValueError(f"region covers {region.shape[0]} axes, system has {ds.dimension}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(region[:, 0], region[:, 1], size=(samples, ds.dimension))
    span = float(np.linalg.norm(region[:, 1] - region[:, 0]))
    h = 1e-6 * max(span, 1.0)
    exclude = 1e-9 * max(span, 1.0)

    violations = 0
    checked = 0
    worst_x, worst_vdot = pts[0], -math.inf
    for x in pts:
        if np.linalg.norm(x - ds.goal) < exclude:
            continue
        checked += 1
        grad = np.empty(ds.dimension)
        for i in range(ds.dimension):
            e = np.zeros(ds.dimension)
            e[i] = h
            grad[i] = (V(x + e) - V(x - e)) / (2.0 * h)
        vdot = float(grad @ ds.evaluate(x))
        if vdot >= 0.0:
            violations += 1
        if vdot > worst_vdot:
            worst_x, worst_vdot = x.copy(), vdot
    return LyapunovCheck(violations, checked, worst_x, worst_vdot)
