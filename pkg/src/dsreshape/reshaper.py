"""Clock-gated reshaping of a dynamical system from demonstrations.

The reshaped field is f(x) + s * u(x), where u is the predictive mean of
a GP trained on pairs (x_d, xdot_d - f(x_d)) extracted from demonstrations
and s is a scalar clock state tracking a step reference: 1 while t <= t_f,
0 afterwards. Suppressing u after t_f restores the original system's
convergence, so a GAS original stays GAS under reshaping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gp import DEFAULT_HYPER, GpModel, Hyperparameters
from .systems import DimensionMismatchError, DynamicalSystem, GAS, from_dict as system_from_dict

DEFAULT_ALPHA = 10.0  # s reaches the reference within 5/alpha = 0.5 s


@dataclass(frozen=True)
class ClockParams:
    """First-order clock: ds/dt = alpha * (shat(t) - s).

    shat steps from 1 to 0 at t_f. alpha sets the tracking speed; s is
    within e^-5 of the reference 5/alpha seconds after the step.
    """

    t_f: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError(f"t_f must be positive, got {self.t_f}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def shat(self, t: float) -> float:
        return 1.0 if t <= self.t_f else 0.0

    def to_dict(self):
        return {"tf": self.t_f, "alpha": self.alpha}

    @staticmethod
    def from_dict(d):
        return ClockParams(d["tf"], d["alpha"])


def default_clock(demo_duration: float, alpha: float = DEFAULT_ALPHA) -> ClockParams:
    """Clock sized to outlast the demonstration: t_f = 1.25 * duration."""
    if demo_duration <= 0:
        raise ValueError(f"demonstration duration must be positive, got {demo_duration}")
    return ClockParams(1.25 * demo_duration, alpha)


def clock_step(s: float, t: float, clock: ClockParams, dt: float) -> float:
    """Advance the clock state exactly over [t, t + dt].

    The clock ODE is linear with a piecewise-constant reference, so the
    update is the closed-form exponential; a step straddling t_f is split
    there. No integrator error enters s.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t_end = t + dt
    if t_end <= clock.t_f:
        return 1.0 + (s - 1.0) * math.exp(-clock.alpha * dt)
    if t >= clock.t_f:
        return s * math.exp(-clock.alpha * dt)
    s_at_tf = 1.0 + (s - 1.0) * math.exp(-clock.alpha * (clock.t_f - t))
    return s_at_tf * math.exp(-clock.alpha * (t_end - clock.t_f))


@dataclass
class Demonstration:
    """Time-stamped desired positions and velocities.

    Attributes
    ----------
    t : ndarray, shape (T,)
        Strictly increasing timestamps in seconds.
    pos : ndarray, shape (T, n)
    vel : ndarray, shape (T, n)
    name : str
    """

    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.pos = np.atleast_2d(np.asarray(self.pos, dtype=float))
        self.vel = np.atleast_2d(np.asarray(self.vel, dtype=float))
        if self.pos.shape[0] != self.t.size or self.vel.shape != self.pos.shape:
            raise DimensionMismatchError(
                f"inconsistent sample shapes: t {self.t.shape}, pos {self.pos.shape}, "
                f"vel {self.vel.shape}"
            )
        if self.t.size < 1:
            raise ValueError("demonstration needs at least one sample")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.pos))
                and np.all(np.isfinite(self.vel))):
            raise ValueError("demonstration contains non-finite values")
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            bad = int(np.flatnonzero(np.diff(self.t) <= 0)[0]) + 1
            raise ValueError(f"timestamps must be strictly increasing (sample {bad})")

    def __len__(self):
        return self.t.size

    @property
    def dimension(self) -> int:
        return self.pos.shape[1]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def start(self) -> np.ndarray:
        return self.pos[0].copy()

    @property
    def end(self) -> np.ndarray:
        return self.pos[-1].copy()

    def bounding_box(self) -> np.ndarray:
        """Per-axis (min, max) over the demonstrated positions, shape (n, 2)."""
        return np.stack([self.pos.min(axis=0), self.pos.max(axis=0)], axis=1)

    def bbox_diagonal(self) -> float:
        box = self.bounding_box()
        return float(np.linalg.norm(box[:, 1] - box[:, 0]))

    def max_speed(self) -> float:
        return float(np.linalg.norm(self.vel, axis=1).max())

    def to_dict(self):
        return {
            "name": self.name,
            "t": self.t.tolist(),
            "positions": self.pos.tolist(),
            "velocities": self.vel.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return Demonstration(
            d["t"], d["positions"], d["velocities"], name=d.get("name", "")
        )


class LearnResult(NamedTuple):
    accepted: int
    rejected: int


def extract_training_pairs(demo: Demonstration, original: DynamicalSystem):
    """Regression data for the control input: targets xdot_d - f(x_d).

    Returns (X, Lam), both shape (T, n), in demonstration order. The
    control learned on these pairs makes f(x) + u(x) match the
    demonstrated velocities along the demonstration.
    """
    if demo.dimension != original.dimension:
        raise DimensionMismatchError(
            f"demonstration dimension {demo.dimension} vs system {original.dimension}"
        )
    f_at = np.array([original.evaluate(x) for x in demo.pos])
    return demo.pos.copy(), demo.vel - f_at


class ReshapedSystem:
    """Original system plus a clock-gated learned control input.

    Attributes
    ----------
    original : DynamicalSystem
    controller : GpModel
        Maps position to the additive control; empty means u = 0.
    clock : ClockParams
    cbar : float
        Acceptance threshold on prediction-error cost, in velocity units.
    """

    def __init__(self, original: DynamicalSystem, clock: ClockParams, cbar: float,
                 controller: GpModel | None = None,
                 hyper: Hyperparameters = DEFAULT_HYPER):
        if cbar < 0:
            raise ValueError(f"cbar must be non-negative, got {cbar}")
        if controller is None:
            controller = GpModel(original.dimension, hyper)
        if controller.dim != original.dimension:
            raise DimensionMismatchError(
                f"controller dimension {controller.dim} vs system {original.dimension}"
            )
        self.original = original
        self.controller = controller
        self.clock = clock
        self.cbar = float(cbar)

    @property
    def dimension(self) -> int:
        return self.original.dimension

    @property
    def goal(self) -> np.ndarray:
        return self.original.goal

    @property
    def gas_guaranteed(self) -> bool:
        """Whether suppressing the control provably restores convergence.

        True only when the original system is flagged GAS; a GP-learned or
        otherwise unverified original gives no guarantee to inherit.
        """
        return self.original.stability == GAS

    @classmethod
    def bare(cls, original: DynamicalSystem, t_f: float = 1.0) -> "ReshapedSystem":
        """A reshaped system with an empty controller (field equals f)."""
        return cls(original, ClockParams(t_f), cbar=0.0)

    def reshaped_field(self, x, s: float) -> np.ndarray:
        """f(x) + s * u(x) for a gate value s in [0, 1]. Pure in (x, s)."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"gate value s must lie in [0, 1], got {s}")
        base = self.original.evaluate(x)
        if s == 0.0 or self.controller.is_empty:
            return base
        return base + s * self.controller.predict(x).mean

    def learn_increment(self, demo: Demonstration) -> LearnResult:
        """Feed one demonstration through the cost gate, in time order.

        Each accepted sample immediately updates the controller used to
        score the next one, so a demonstration the model already explains
        adds nothing.
        """
        X, Lam = extract_training_pairs(demo, self.original)
        accepted = 0
        for x, lam in zip(X, Lam):
            added, _ = self.controller.incremental_add(x, lam, self.cbar)
            accepted += int(added)
        return LearnResult(accepted, len(demo) - accepted)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "original": self.original.to_dict(),
            "controller": self.controller.to_dict(),
            "clock": self.clock.to_dict(),
            "cbar": self.cbar,
        }

    @staticmethod
    def from_dict(d: dict) -> "ReshapedSystem":
        return ReshapedSystem(
            system_from_dict(d["original"]),
            ClockParams.from_dict(d["clock"]),
            d["cbar"],
            controller=GpModel.from_dict(d["controller"]),
        )

    def __repr__(self):
        return (f"<ReshapedSystem dim={self.dimension} points={self.controller.size} "
                f"tf={self.clock.t_f} cbar={self.cbar}>")
