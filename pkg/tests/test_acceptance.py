"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[acceptance] <criterion>: PASS/FAIL` line. The
LASA table check is data-gated: it runs only when a user-exported
dataset is present under data/lasa (see tools/export_lasa.py).
"""

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import dsreshape as dr
from dsreshape import cli, metrics as met, sim
from conftest import minjerk_line_demo, random_smooth_demo, s_curve_demo

LASA_DIR = Path(__file__).resolve().parent.parent / "data" / "lasa"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL", flush=True)
        raise
    print(f"[acceptance] {name}: PASS", flush=True)


def test_gate_closure_convergence_suite():
    # 20 random smooth demonstrations reshaping f = -3x in 2-D, random
    # hyperparameters in [0.1, 3]: every rollout reaches 1e-3 * span of
    # the goal by t_f + 10 s, in under 30 s of wall time.
    with criterion("gate-closure convergence suite"):
        rng = np.random.default_rng(42)
        f = dr.LinearGain(3.0, [0.0, 0.0])
        start = time.perf_counter()
        for _ in range(20):
            demo = random_smooth_demo(rng)
            hyper = dr.Hyperparameters(*rng.uniform(0.1, 3.0, 3))
            _, lam = dr.extract_training_pairs(demo, f)
            cbar = 0.05 * float(np.linalg.norm(lam, axis=1).max())
            rs = dr.ReshapedSystem(f, dr.default_clock(demo.duration),
                                   cbar=cbar, hyper=hyper)
            rs.learn_increment(demo)
            span = demo.bbox_diagonal()
            cfg = dr.RolloutConfig(dt=0.005, max_time=rs.clock.t_f + 10.0,
                                   goal_tolerance=1e-3 * span)
            traj = dr.rollout(rs, demo.start, cfg)
            assert traj.terminated_by == "goal_reached"
            assert traj.goal_error() < 1e-3 * span
            assert traj.t[-1] <= rs.clock.t_f + 10.0
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"runtime {elapsed:.1f}s exceeds 30s"


def test_spurious_attractor_replay():
    # adversarial demo from the goal to (0.6, 0.6): exactly one stall
    # interval centered within 0.05 of the spurious point, then the
    # trajectory still reaches the goal once the gate closes.
    with criterion("spurious-attractor replay"):
        start = time.perf_counter()
        f = dr.LinearGain(3.0, [0.0, 0.0])
        rs = dr.ReshapedSystem(f, dr.ClockParams(2.0), cbar=0.0,
                               hyper=dr.Hyperparameters(1.0, 0.01, 1e-8))
        rs.learn_increment(minjerk_line_demo([0.6, 0.6]))
        cfg = dr.RolloutConfig(dt=0.005, max_time=10.0, goal_tolerance=1e-2)
        traj = dr.rollout(rs, [2.0, 2.0], cfg)
        assert traj.terminated_by == "goal_reached"
        stalls = sim.detect_stall(traj, speed_eps=0.03, window=0.3)
        assert len(stalls) == 1
        assert np.linalg.norm(stalls[0].x_stall - np.array([0.6, 0.6])) < 0.05
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"runtime {elapsed:.1f}s exceeds 5s"


def _six_dof_scenario():
    start_deg = np.array([35.0, 55.0, 15.0, -65.0, -15.0, 50.0])
    goal_deg = np.array([-60.0, 30.0, 30.0, -70.0, 25.0, 85.0])
    start, goal = np.deg2rad(start_deg), np.deg2rad(goal_deg)
    f = dr.LinearGain(3.0, goal)
    at_025 = goal + (start - goal) * math.exp(-3 * 0.25)
    t = np.linspace(0.25, 1.25, 100)
    line = at_025[None, :] + np.deg2rad(20.0) * (t - 0.25)[:, None]
    vel = np.full((100, 6), np.deg2rad(20.0))
    demo = dr.Demonstration(t, line, vel, name="joint-line")
    rs = dr.ReshapedSystem(f, dr.ClockParams(1.5), cbar=1.0,
                           hyper=dr.Hyperparameters(0.1, 0.01, 0.04))
    counts = rs.learn_increment(demo)
    return f, rs, demo, counts, start, goal


def test_six_dof_sparsity_replay():
    # joint-space line demo with a 1 rad/s acceptance threshold: the
    # stored points stay far below the 100 samples and the reshaped
    # rollout still converges to within 0.5 deg of the goal.
    with criterion("6-D sparsity replay (count band + convergence)"):
        t0 = time.perf_counter()
        f, rs, demo, counts, start, goal = _six_dof_scenario()
        assert 15 <= counts.accepted <= 45
        assert counts.accepted + counts.rejected == 100
        cfg = dr.RolloutConfig(dt=0.005, max_time=5.0,
                               goal_tolerance=np.deg2rad(0.45))
        traj = dr.rollout(rs, start, cfg)
        assert traj.terminated_by == "goal_reached"
        assert np.rad2deg(np.abs(traj.final_state - goal)).max() < 0.5
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"runtime {elapsed:.1f}s exceeds 10s"


def test_six_dof_sparsity_replay_window_tracking():
    # Expected to fail: the 1 rad/s gate tolerates velocity errors of up
    # to ~57 deg/s between stored points, which integrates to far more
    # than 2 deg of position error inside the demo window; even the
    # ungated dense fit at the same kernel/noise settings sits ~4 deg off
    # at the window opening. See the decisions ledger.
    with criterion("6-D sparsity replay (2-deg window tracking)"):
        f, rs, demo, counts, start, goal = _six_dof_scenario()
        cfg = dr.RolloutConfig(dt=0.005, max_time=5.0,
                               goal_tolerance=np.deg2rad(0.45))
        traj = dr.rollout(rs, start, cfg)
        window = traj.position_at(demo.t)
        per_joint_deg = np.rad2deg(np.abs(window - demo.pos))
        assert per_joint_deg.max() < 2.0


def test_single_demo_reproduction_accuracy():
    # S-shaped spline demo, near-interpolating controller: the rollout
    # sweeps less than 1% of the demo bounding-box area against the demo.
    with criterion("single-demo reproduction accuracy (SEA < 1%)"):
        t0 = time.perf_counter()
        demo = s_curve_demo()
        f = dr.LinearGain(3.0, [0.0, 0.0])
        rs = dr.ReshapedSystem(f, dr.default_clock(demo.duration), cbar=1e-3,
                               hyper=dr.Hyperparameters(1.0, 0.005, 1e-8))
        rs.learn_increment(demo)
        cfg = dr.RolloutConfig(dt=0.005, max_time=3.0,
                               goal_tolerance=1e-3 * demo.bbox_diagonal())
        traj = dr.rollout(rs, demo.start, cfg)
        sea = met.swept_error_area(
            met.resample_equidistant(traj.x, len(demo)), demo.pos)
        box = demo.bounding_box()
        area = float(np.prod(box[:, 1] - box[:, 0]))
        assert sea < 0.01 * area, f"SEA {sea:.4f} vs 1% of area {area:.4f}"
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"runtime {elapsed:.1f}s exceeds 5s"


def test_gp_incremental_matches_dense_oracle():
    # incremental factorization vs an independent dense solve, 1e-8
    with criterion("GP incremental/dense equivalence"):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            length = int(rng.integers(20, 201))
            hyper = dr.Hyperparameters(float(rng.uniform(0.2, 2.0)),
                                       float(rng.uniform(0.05, 1.0)),
                                       float(rng.uniform(1e-6, 0.2)))
            model = dr.GpModel(n, hyper)
            X = rng.uniform(-2, 2, size=(length, n))
            Y = rng.normal(size=(length, n))
            cbar = float(rng.uniform(0.0, 0.5))
            for x, y in zip(X, Y):
                model.incremental_add(x, y, cbar)
            if model.is_empty:
                continue
            # dense oracle: explicit kernel Gram and numpy solve
            from dsreshape.gp import kernel_matrix
            K = kernel_matrix(model.inputs, model.inputs, hyper)
            K[np.diag_indices_from(K)] += (hyper.noise_variance
                                           + 1e-10 * hyper.signal_variance)
            alpha = np.linalg.solve(K, model.outputs)
            Kinv = np.linalg.inv(K)
            for xq in rng.uniform(-2, 2, size=(50, n)):
                ks = kernel_matrix(model.inputs, xq[None, :], hyper)[:, 0]
                want_mean = ks @ alpha
                want_var = max(hyper.signal_variance - ks @ Kinv @ ks, 0.0)
                got = model.predict(xq)
                assert np.allclose(got.mean, want_mean, atol=1e-8)
                assert abs(got.variance - want_var) < 1e-8


def test_metric_and_integrator_oracles():
    with criterion("metric oracles (SEA, clock, RK4)"):
        # unit-square SEA construction
        sea = met.swept_error_area([[0.0, 0.0], [1.0, 0.0]],
                                   [[0.0, 1.0], [1.0, 1.0]])
        assert abs(sea - 1.0) <= 1e-12
        # clock analytic value past t_f
        got = dr.clock_step(1.0, 3.0, dr.ClockParams(2.0, 10.0), 0.5)
        assert abs(got - math.exp(-5.0)) <= 1e-12
        # RK4 vs the closed-form linear solution
        rs = dr.ReshapedSystem.bare(dr.LinearGain(3.0, [0.0, 0.0]))
        cfg = dr.RolloutConfig(dt=0.005, max_time=1.0, goal_tolerance=1e-12)
        traj = dr.rollout(rs, [2.0, 2.0], cfg)
        analytic = 2.0 * math.exp(-3.0 * traj.t[-1])
        assert np.linalg.norm(traj.final_state - analytic) < 1e-6


def test_hold_and_release():
    # freezing the state must not change the control and must not break
    # convergence: 10 learned models, a 1 s hold each.
    with criterion("hold-and-release purity + convergence"):
        rng = np.random.default_rng(11)
        f = dr.LinearGain(3.0, [0.0, 0.0])
        for _ in range(10):
            demo = random_smooth_demo(rng)
            while np.linalg.norm(demo.start) < 0.3 * demo.bbox_diagonal():
                demo = random_smooth_demo(rng)
            hyper = dr.Hyperparameters(*rng.uniform(0.1, 3.0, 3))
            _, lam = dr.extract_training_pairs(demo, f)
            cbar = 0.05 * float(np.linalg.norm(lam, axis=1).max())
            rs = dr.ReshapedSystem(f, dr.default_clock(demo.duration),
                                   cbar=cbar, hyper=hyper)
            rs.learn_increment(demo)
            span = demo.bbox_diagonal()
            free = dr.rollout(rs, demo.start,
                              dr.RolloutConfig(dt=0.005, max_time=rs.clock.t_f + 10.0,
                                               goal_tolerance=1e-3 * span))
            hold_start = 0.25 * float(free.t[-1])
            cfg = dr.RolloutConfig(dt=0.005, max_time=rs.clock.t_f + 11.0,
                                   goal_tolerance=1e-3 * span,
                                   perturbations=(dr.Hold(hold_start, 1.0),))
            probe = dr.rollout(rs, demo.start, cfg)
            held = (probe.t >= hold_start - 1e-12) & (probe.t < hold_start + 1.0 - 1e-12)
            assert held.any()
            x_frozen = probe.x[held][0]
            before = rs.controller.predict(x_frozen)
            again = dr.rollout(rs, demo.start, cfg)
            after = rs.controller.predict(x_frozen)
            assert before.mean.tobytes() == after.mean.tobytes()
            assert before.variance == after.variance
            assert probe.terminated_by == "goal_reached"
            assert again.terminated_by == "goal_reached"


@pytest.mark.skipif(not LASA_DIR.is_dir(),
                    reason="user-exported LASA dataset not present under data/lasa")
def test_lasa_table_ballpark(tmp_path):
    # Linear original reshaped into handwriting motions: SEA median lands
    # in a wide plausibility band (exact medians depend on external fits).
    with criterion("LASA table ballpark (optional data)"):
        out = tmp_path / "table.txt"
        rep = tmp_path / "report.json"
        rc = cli.main(["bench", "--dataset", str(LASA_DIR),
                       "--original", "linear:3", "--metrics", "sea,vrmse",
                       "--max-demos", "3", "--subsample", "100",
                       "--truncate-goal", "10", "--cbar", "0.0",
                       "--fit-hyper", "--out", str(out), "--json", str(rep)])
        assert rc == 0
        doc = json.loads(rep.read_text())
        assert 40.0 <= doc["sea"]["median"] <= 500.0
