import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import dsreshape as dr
from dsreshape import metrics as met
from conftest import s_curve_demo


def test_resample_straight_segment():
    out = met.resample_equidistant([[0.0, 0.0], [1.0, 0.0]], 3)
    assert np.allclose(out, [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])


def test_resample_idempotent_on_equidistant_path():
    path = np.stack([np.linspace(0, 1, 7), np.linspace(0, 2, 7)], axis=1)
    out = met.resample_equidistant(path, 7)
    assert np.allclose(out, path, atol=1e-12)


def test_resample_l_shape_arc_length_oracle():
    # legs of length 1 + 1: arc lengths 0, 0.5, 1, 1.5, 2
    path = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]
    out = met.resample_equidistant(path, 5)
    want = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 0.5], [1.0, 1.0]]
    assert np.allclose(out, want, atol=1e-12)


def test_resample_rejects_degenerate():
    with pytest.raises(ValueError):
        met.resample_equidistant([[0.0, 0.0], [0.0, 0.0]], 3)
    with pytest.raises(ValueError):
        met.resample_equidistant([[0.0, 0.0]], 3)


def test_sea_identical_paths_zero():
    path = np.random.default_rng(0).uniform(size=(20, 2))
    assert met.swept_error_area(path, path) == 0.0


def test_sea_unit_square():
    rep = [[0.0, 0.0], [1.0, 0.0]]
    dem = [[0.0, 1.0], [1.0, 1.0]]
    assert met.swept_error_area(rep, dem) == pytest.approx(1.0, abs=1e-12)


def test_sea_parallel_segments_rectangle():
    L, h = 2.5, 0.75
    rep = [[0.0, 0.0], [L, 0.0]]
    dem = [[0.0, h], [L, h]]
    assert met.swept_error_area(rep, dem) == pytest.approx(L * h, abs=1e-12)


def test_sea_3d_supported_higher_rejected():
    rep = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    dem = [[0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
    assert met.swept_error_area(rep, dem) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        met.swept_error_area(np.zeros((3, 4)), np.ones((3, 4)))
    with pytest.raises(ValueError):
        met.swept_error_area(np.zeros((3, 2)), np.ones((4, 2)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_sea_symmetric_and_rigid_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(12, 2))
    b = rng.uniform(-1, 1, size=(12, 2))
    sea = met.swept_error_area(a, b)
    assert met.swept_error_area(b, a) == pytest.approx(sea, rel=1e-12)
    theta = rng.uniform(0, 2 * np.pi)
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shift = rng.uniform(-5, 5, size=2)
    assert met.swept_error_area(a @ R.T + shift, b @ R.T + shift) == pytest.approx(
        sea, rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
@settings(max_examples=40, deadline=None)
def test_sea_scales_quadratically(seed, k):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(10, 2))
    b = rng.uniform(-1, 1, size=(10, 2))
    assert met.swept_error_area(k * a, k * b) == pytest.approx(
        k * k * met.swept_error_area(a, b), rel=1e-9, abs=1e-12)


def test_velocity_rmse_self_consistent_zero():
    f = dr.LinearGain(3.0, [0.0, 0.0])
    t = np.linspace(0, 1, 50)
    pos = np.exp(-3 * t)[:, None] * np.array([1.0, 2.0])
    demo = dr.Demonstration(t, pos, -3.0 * pos)
    assert met.velocity_rmse(demo, f) < 1e-12


def test_velocity_rmse_arithmetic():
    f = dr.Handcrafted(lambda x: np.zeros(1), [0.0])
    demo = dr.Demonstration([0.0, 1.0], [[0.0], [1.0]], [[3.0], [4.0]])
    assert met.velocity_rmse(demo, f) == pytest.approx(np.sqrt(12.5))


def test_velocity_rmse_reorder_invariant():
    rng = np.random.default_rng(1)
    f = dr.LinearGain(2.0, [0.0, 0.0])
    t = np.linspace(0, 1, 30)
    pos = rng.uniform(-1, 1, size=(30, 2))
    vel = rng.uniform(-1, 1, size=(30, 2))
    demo = dr.Demonstration(t, pos, vel)
    perm = rng.permutation(30)
    shuffled = dr.Demonstration(t, pos[perm], vel[perm])
    assert met.velocity_rmse(demo, f) == pytest.approx(
        met.velocity_rmse(shuffled, f), rel=1e-12)


def test_velocity_rmse_on_trained_field():
    demo = s_curve_demo(count=60)
    f = dr.LinearGain(3.0, [0.0, 0.0])
    rs = dr.ReshapedSystem(f, dr.default_clock(demo.duration), cbar=1e-9,
                           hyper=dr.Hyperparameters(1.0, 0.002, 1e-10))
    rs.learn_increment(demo)
    assert met.velocity_rmse(demo, rs) < 1e-3 * demo.max_speed()


def test_quantiles():
    assert met.quantile_summary([5.0]) == (5.0, 5.0, 5.0)
    q = met.quantile_summary(np.arange(1.0, 101.0))
    assert q.median == pytest.approx(50.5)
    assert q.q10 == pytest.approx(10.9)
    assert q.q90 == pytest.approx(90.1)
    rng = np.random.default_rng(2)
    vals = rng.uniform(size=37)
    shuffled = vals[rng.permutation(37)]
    assert met.quantile_summary(vals) == met.quantile_summary(shuffled)
    with pytest.raises(ValueError):
        met.quantile_summary([])


def test_report_tables_and_json():
    rep = met.MetricReport(sea_unit="mm^2", v_unit="mm/s")
    rep.add("angle", "demo1", sea=124.0, v_rmse=5.2)
    rep.add("angle", "demo2", sea=25.0, v_rmse=3.4)
    rep.add("sine", "demo1", sea=604.0, v_rmse=9.0)
    table = rep.to_table(label="linear+reshape")
    assert "SEA [mm^2] (Me / Q10 / Q90)" in table
    assert "linear+reshape" in table
    doc = rep.to_dict()
    assert doc["sea"]["median"] == pytest.approx(124.0)
    assert len(doc["rows"]) == 3
    breakdown = rep.per_motion_table()
    assert breakdown.splitlines()[0].startswith("motion")
    assert "sine" in breakdown
