import numpy as np
import pytest
from scipy.interpolate import CubicSpline

import dsreshape as dr


def minjerk_line_demo(target, duration=1.0, count=100):
    """Straight-line demo from the origin to `target` with zero end velocity.

    The terminal sample has xdot = 0, so the learned control exactly
    cancels the original field there: the spurious-attractor construction.
    """
    tau = np.linspace(0.0, 1.0, count)
    p = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    pd = (30 * tau**2 - 60 * tau**3 + 30 * tau**4) / duration
    target = np.asarray(target, dtype=float)
    return dr.Demonstration(tau * duration, np.outer(p, target),
                            np.outer(pd, target), name="line")


def s_curve_demo(count=100, duration=1.0):
    """S-shaped spline from (1,1) to the origin; free start, clamped end."""
    way_t = np.linspace(0.0, duration, 4)
    way = np.array([[1.0, 1.0], [0.55, 0.78], [0.45, 0.22], [0.0, 0.0]])
    cs = CubicSpline(way_t, way, bc_type=((2, (0.0, 0.0)), (1, (0.0, 0.0))))
    t = np.linspace(0.0, duration, count)
    return dr.Demonstration(t, cs(t), cs(t, 1), name="s-curve")


def random_smooth_demo(rng, count=100, duration=1.0, box=1.5):
    """Random cubic-spline demonstration through 4-6 waypoints in 2-D."""
    k = int(rng.integers(4, 7))
    way = rng.uniform(-box, box, size=(k, 2))
    way_t = np.sort(np.concatenate([[0.0, duration],
                                    rng.uniform(0.05, 0.95, k - 2) * duration]))
    cs = CubicSpline(way_t, way)
    t = np.linspace(0.0, duration, count)
    return dr.Demonstration(t, cs(t), cs(t, 1), name="random")


def learned_random_system(rng, cbar_frac=0.05):
    """A reshaped f = -3x in 2-D taught with one random demo, random hyper."""
    f = dr.LinearGain(3.0, [0.0, 0.0])
    demo = random_smooth_demo(rng)
    hyper = dr.Hyperparameters(*rng.uniform(0.1, 3.0, 3))
    _, lam = dr.extract_training_pairs(demo, f)
    cbar = cbar_frac * float(np.linalg.norm(lam, axis=1).max())
    rs = dr.ReshapedSystem(f, dr.default_clock(demo.duration), cbar=cbar, hyper=hyper)
    rs.learn_increment(demo)
    return rs, demo


@pytest.fixture
def spurious_system():
    """f = -3x in 2-D reshaped by a goal-to-(0.6,0.6) outward demo, t_f = 2 s."""
    f = dr.LinearGain(3.0, [0.0, 0.0])
    demo = minjerk_line_demo([0.6, 0.6])
    rs = dr.ReshapedSystem(f, dr.ClockParams(2.0), cbar=0.0,
                           hyper=dr.Hyperparameters(1.0, 0.01, 1e-8))
    rs.learn_increment(demo)
    return rs, demo
