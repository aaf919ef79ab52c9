import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from botarena.controllers import (ControllerGains, position_waypoint_controller, si_position_controller, si_to_uni,
                                  uni_to_si, unicycle_pose_controller)
from botarena.geometry import SimParams, step_unicycle, wrap_angle

G = ControllerGains()
P = SimParams()
coord = st.floats(-1.5, 1.5, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)
vel = st.floats(-0.5, 0.5, allow_nan=False)


def projected(pose, l=G.projection_distance):
    return pose[0] + l * math.cos(pose[2]), pose[1] + l * math.sin(pose[2])


def rollout(pose, ctrl, steps, sub_steps=10):
    for _ in range(steps * sub_steps):
        pose = step_unicycle(pose, ctrl(pose), P.dt)
    return pose


def test_si_position_examples():
    assert si_position_controller((0, 0), (0, 0), G, 0.15) == (0.0, 0.0)
    assert si_position_controller((0, 0), (1, 0), G, 0.15) == pytest.approx((0.15, 0.0))
    assert si_position_controller((0, 0), (0.05, 0), G, 0.15) == pytest.approx((0.05, 0.0))


def test_si_to_uni_examples():
    assert si_to_uni((0.1, 0), (0, 0, 0), G) == pytest.approx((0.1, 0.0))
    assert si_to_uni((0, 0.1), (0, 0, 0), G, saturate=False) == pytest.approx((0.0, 2.0))
    assert si_to_uni((0, 0), (0.3, 0.1, 1.0), G) == (0.0, 0.0)


def test_pose_controller_examples():
    assert unicycle_pose_controller((0.2, 0.3, 0.4), (0.2, 0.3, 0.4), G) == (0.0, 0.0)
    v, w = unicycle_pose_controller((0, 0, 0), (1, 0, 0), G, SimParams(v_max=1.0))
    assert v == pytest.approx(G.k_rho * 1.0) and w == pytest.approx(0.0)


def test_waypoint_controller_examples():
    pose = (0.0, 0.0, 0.0)
    assert position_waypoint_controller(pose, projected(pose), G) == (0.0, 0.0)
    v, w = position_waypoint_controller(pose, (1, 0), G)
    assert v > 0 and abs(w) < 1e-12


def test_gain_validation():
    with pytest.raises(ValueError):
        ControllerGains(k_beta=0.1)
    with pytest.raises(ValueError):
        ControllerGains(projection_distance=0.0)


@given(coord, coord, angle, coord, coord, angle)
def test_every_command_respects_limits(x, y, th, gx, gy, gth):
    si = si_position_controller((x, y), (gx, gy), G, P.si_max_speed)
    assert math.hypot(*si) <= P.si_max_speed + 1e-12
    for v, w in (position_waypoint_controller((x, y, th), (gx, gy), G),
                 unicycle_pose_controller((x, y, th), (gx, gy, gth), G),
                 si_to_uni((gx, gy), (x, y, th), G)):
        assert abs(v) <= P.v_max + 1e-12 and abs(w) <= P.omega_max + 1e-12


@given(vel, vel, vel, vel, st.floats(-3, 3), st.floats(-3, 3), angle)
def test_si_to_uni_is_linear(ax, ay, bx, by, s, t, th):
    pose = (0.0, 0.0, th)
    lhs = si_to_uni((s * ax + t * bx, s * ay + t * by), pose, G, saturate=False)
    a = si_to_uni((ax, ay), pose, G, saturate=False)
    b = si_to_uni((bx, by), pose, G, saturate=False)
    assert lhs == pytest.approx((s * a[0] + t * b[0], s * a[1] + t * b[1]), abs=1e-12)


@given(vel, vel, angle)
def test_uni_to_si_inverts_si_to_uni(vx, vy, th):
    cmd = si_to_uni((vx, vy), (0, 0, th), G, saturate=False)
    assert uni_to_si(cmd, (0, 0, th), G) == pytest.approx((vx, vy), abs=1e-12)


@given(coord, coord, angle, coord, coord)
def test_projected_distance_never_increases(x, y, th, gx, gy):
    pose = (x, y, th)
    ctrl = lambda p: position_waypoint_controller(p, (gx, gy), G)
    prev = math.dist(projected(pose), (gx, gy))
    for _ in range(200):
        pose = step_unicycle(pose, ctrl(pose), P.dt)
        d = math.dist(projected(pose), (gx, gy))
        assert d <= prev + 1e-6
        prev = d


def test_position_controller_converges_on_100_pairs():
    rng = np.random.default_rng(11)
    for _ in range(100):
        start = (rng.uniform(-1.5, 1.5), rng.uniform(-0.9, 0.9), rng.uniform(-math.pi, math.pi))
        goal = (rng.uniform(-1.5, 1.5), rng.uniform(-0.9, 0.9))
        end = rollout(start, lambda p: position_waypoint_controller(p, goal, G), 200)
        assert math.dist(projected(end), goal) <= 0.05


def test_pose_controller_converges_on_100_pairs():
    rng = np.random.default_rng(12)
    for _ in range(100):
        start = (rng.uniform(-1.5, 1.5), rng.uniform(-0.9, 0.9), rng.uniform(-math.pi, math.pi))
        goal = (rng.uniform(-1.5, 1.5), rng.uniform(-0.9, 0.9), rng.uniform(-math.pi, math.pi))
        end = rollout(start, lambda p: unicycle_pose_controller(p, goal, G), 400)
        assert math.dist(end[:2], goal[:2]) <= 0.02
        assert abs(wrap_angle(end[2] - goal[2])) <= 0.1
