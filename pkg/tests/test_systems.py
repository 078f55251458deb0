import numpy as np
import pytest

import dsreshape as dr
from dsreshape import systems


def test_linear_gain_field():
    f = dr.LinearGain(3.0, [0.0, 0.0])
    assert np.allclose(f.evaluate([1.0, 2.0]), [-3.0, -6.0])


def test_equilibrium_at_goal():
    goal = np.deg2rad([-60.0, 30.0, 30.0, -70.0, 25.0, 85.0])
    f = dr.LinearGain(3.0, goal)
    assert np.linalg.norm(f.evaluate(goal)) < 1e-12
    w = dr.wrap_second_order(2.0, 2.0 * np.sqrt(2.0), [1.0, -1.0])
    assert np.linalg.norm(w.evaluate(w.goal)) < 1e-12


def test_six_dof_joint_field():
    # 3 * (goal - start) in degrees, from the 6-D joint-space scenario
    goal = np.array([-60.0, 30.0, 30.0, -70.0, 25.0, 85.0])
    start = np.array([35.0, 55.0, 15.0, -65.0, -15.0, 50.0])
    f = dr.LinearGain(3.0, goal)
    assert np.allclose(f.evaluate(start), [-285.0, -75.0, 45.0, -15.0, 120.0, 105.0])


def test_evaluate_validates_input():
    f = dr.LinearGain(3.0, [0.0, 0.0])
    with pytest.raises(dr.DimensionMismatchError):
        f.evaluate([1.0, 2.0, 3.0])
    with pytest.raises(dr.NonFiniteInputError):
        f.evaluate([np.nan, 0.0])


def test_compose_empty_matches_base():
    rng = np.random.default_rng(0)
    f = dr.LinearGain(2.0, [0.5, -0.5])
    c = dr.compose(f, [])
    for x in rng.uniform(-3, 3, size=(100, 2)):
        assert np.array_equal(c.evaluate(x), f.evaluate(x))


def test_compose_cancellation():
    f = dr.LinearGain(2.0, [0.0, 0.0])
    c = dr.compose(f, [lambda x: -f.evaluate(x)])
    rng = np.random.default_rng(1)
    for x in rng.uniform(-3, 3, size=(20, 2)):
        assert np.allclose(c.evaluate(x), 0.0, atol=1e-14)


def test_compose_is_commutative_and_additive():
    rng = np.random.default_rng(2)
    f = dr.LinearGain(1.5, [0.0, 0.0])
    u1 = lambda x: np.sin(x)
    u2 = lambda x: x**2
    c12 = dr.compose(f, [u1, u2])
    c21 = dr.compose(f, [u2, u1])
    single = dr.compose(f, [u1])
    for x in rng.uniform(-2, 2, size=(100, 2)):
        assert np.allclose(c12.evaluate(x), c21.evaluate(x), rtol=1e-15, atol=1e-15)
        assert np.array_equal(single.evaluate(x), f.evaluate(x) + u1(x))


def test_compose_weighted_gate():
    f = dr.LinearGain(1.0, [0.0])
    u = lambda x: np.ones(1)
    c = dr.compose(f, [(u, 0.25)])
    assert np.allclose(c.evaluate([2.0]), -2.0 + 0.25)


def test_second_order_wrapper_field():
    w = dr.wrap_second_order(2.0, 2.0 * np.sqrt(2.0), [0.0])
    # x1 = 1, x2 = 0: acceleration must be -2, velocity 0
    assert np.allclose(w.evaluate([1.0, 0.0]), [0.0, -2.0])
    with pytest.raises(ValueError):
        dr.wrap_second_order(-1.0, 1.0, [0.0])
    with pytest.raises(ValueError):
        dr.wrap_second_order(1.0, 0.0, [0.0])


def test_second_order_rollout_converges():
    # endpoint cross-checked against an independent small-step Euler loop
    start1 = np.deg2rad([35.0, 55.0, 15.0, -65.0, -15.0, 50.0, 90.0])
    goal1 = np.deg2rad([-60.0, 30.0, 30.0, -70.0, -15.0, 85.0, 15.0])
    w = dr.wrap_second_order(2.0, 2.0 * np.sqrt(2.0), goal1)
    x0 = np.concatenate([start1, np.zeros(7)])

    x = x0.copy()
    dt = 1e-3
    for _ in range(int(12.0 / dt)):
        x = x + dt * w.evaluate(x)
    assert np.linalg.norm(x - w.goal) < 1e-3

    rs = dr.ReshapedSystem.bare(w)
    cfg = dr.RolloutConfig(dt=0.005, max_time=12.0, goal_tolerance=1e-4)
    traj = dr.rollout(rs, x0, cfg)
    assert traj.terminated_by == "goal_reached"
    assert np.linalg.norm(traj.final_state - x) < 5e-3


def test_lyapunov_oracle_linear_gain():
    # V = |x - goal|^2 decreases everywhere away from the goal
    f = dr.LinearGain(3.0, [0.2, -0.4])
    V = lambda x: float(np.sum((x - f.goal) ** 2))
    check = dr.lyapunov_decrease_check(f, V, samples=1000,
                                       region=[[-2, 2], [-2, 2]], seed=7)
    assert check.violations == 0
    assert check.worst_vdot < 0


def test_gp_learned_flagged_unknown():
    model = dr.GpModel(2, dr.Hyperparameters(1.0, 0.5, 0.01))
    g = dr.GpField(model, [0.0, 0.0])
    assert g.stability == systems.UNSTABLE_UNKNOWN
    assert np.allclose(g.evaluate([1.0, 1.0]), 0.0)


def test_handcrafted_gas_declaration_checked():
    with pytest.raises(ValueError):
        dr.Handcrafted(lambda x: x + 1.0, [0.0], stability=systems.GAS)
    ok = dr.Handcrafted(lambda x: -x, [0.0], stability=systems.GAS)
    assert ok.stability == systems.GAS


def test_serialization_round_trip():
    f = dr.LinearGain(3.0, [0.25, -1.0])
    doc = f.to_dict()
    g = systems.from_dict(doc)
    assert g.to_dict() == doc

    w = dr.wrap_second_order(2.0, 1.5, [0.5, 0.5])
    assert systems.from_dict(w.to_dict()).to_dict() == w.to_dict()

    model = dr.GpModel.from_data([[0.0, 0.0], [1.0, 1.0]], [[0.5, 0.1], [0.2, 0.3]],
                                 dr.Hyperparameters(1.0, 0.5, 0.01))
    gp_sys = dr.GpField(model, [0.0, 0.0])
    back = systems.from_dict(gp_sys.to_dict())
    assert back.to_dict() == gp_sys.to_dict()
    x = [0.3, 0.7]
    assert np.allclose(back.evaluate(x), gp_sys.evaluate(x))

    comp = dr.compose(f, [(dr.LinearGain(1.0, [0.0, 0.0]), 0.5)])
    back = systems.from_dict(comp.to_dict())
    assert np.allclose(back.evaluate([1.0, 2.0]), comp.evaluate([1.0, 2.0]))


def test_handcrafted_serialization_needs_registry():
    h = dr.Handcrafted(lambda x: -x, [0.0, 0.0])
    with pytest.raises(ValueError):
        h.to_dict()
    named = systems.register_handcrafted(
        "mirror", dr.Handcrafted(lambda x: -x, [0.0, 0.0], name="mirror"))
    assert systems.from_dict(named.to_dict()) is named


def test_systems_are_immutable():
    f = dr.LinearGain(3.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        f.goal[0] = 1.0
