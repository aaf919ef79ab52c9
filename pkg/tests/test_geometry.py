import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from botarena.geometry import (SimParams, clamp_to_arena, pairwise_distances, projected_points, step_unicycle,
                               wrap_angle)
from oracles import brute_force_distances

finite = st.floats(-1e6, 1e6, allow_nan=False)
coord = st.floats(-2.0, 2.0, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


def test_wrap_examples():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(3 * math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        wrap_angle(bad)


@given(finite)
def test_wrap_range_and_congruence(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    k = (theta - w) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-6 * max(1.0, abs(theta))


def test_step_examples():
    assert step_unicycle((0, 0, 0), (1, 0), 0.033) == pytest.approx((0.033, 0, 0))
    x, y, th = step_unicycle((0, 0, math.pi / 2), (1, 0), 0.033)
    assert (x, y, th) == pytest.approx((0, 0.033, math.pi / 2), abs=1e-15)
    assert step_unicycle((0.5, -0.2, 0.3), (0, 0), 0.033) == (0.5, -0.2, 0.3)


@given(coord, coord, angle, st.floats(0.001, 1.0))
def test_zero_command_is_fixed_point(x, y, th, dt):
    assert tuple(step_unicycle((x, y, th), (0.0, 0.0), dt)) == (x, y, wrap_angle(th))


@given(coord, coord, angle, st.floats(-0.2, 0.2), st.floats(0.001, 0.1))
def test_half_steps_equal_full_step_without_turning(x, y, th, v, dt):
    once = step_unicycle((x, y, th), (v, 0.0), dt)
    mid = step_unicycle((x, y, th), (v, 0.0), dt / 2)
    twice = step_unicycle(mid, (v, 0.0), dt / 2)
    assert np.allclose(once, twice, atol=1e-12)


@given(coord, coord, angle, angle,
       st.lists(st.tuples(st.floats(-0.2, 0.2), st.floats(-3.6, 3.6)), min_size=1, max_size=30))
def test_rotational_symmetry(x, y, th, rot, cmds):
    c, s = math.cos(rot), math.sin(rot)
    p = (x, y, th)
    q = (c * x - s * y, s * x + c * y, wrap_angle(th + rot))
    for k, cmd in enumerate(cmds, start=1):
        p = step_unicycle(p, cmd, 0.033)
        q = step_unicycle(q, cmd, 0.033)
        rx, ry = c * p[0] - s * p[1], s * p[0] + c * p[1]
        assert abs(rx - q[0]) <= 1e-9 * k and abs(ry - q[1]) <= 1e-9 * k
        assert abs(wrap_angle(p[2] + rot - q[2])) <= 1e-9 * k
        assert -math.pi < q[2] <= math.pi


def test_pairwise_examples():
    assert np.array_equal(pairwise_distances([(0, 0, 0), (3, 4, 0)]), [[0, 5], [5, 0]])
    assert np.array_equal(pairwise_distances([(0.3, 0.2, 1.0)]), [[0.0]])


@given(st.lists(st.tuples(coord, coord, angle), min_size=1, max_size=8))
def test_pairwise_matches_brute_force(poses):
    d = pairwise_distances(poses)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert np.allclose(d, brute_force_distances(np.array(poses)[:, :2]), atol=1e-15)


def test_pairwise_rejects_empty():
    with pytest.raises(ValueError):
        pairwise_distances(np.zeros((0, 3)))


def test_projected_points_shape_and_value():
    p = projected_points(np.array([[[0.0, 0.0, 0.0], [1.0, 1.0, math.pi / 2]]]), 0.05)
    assert p.shape == (1, 2, 2)
    assert np.allclose(p[0], [[0.05, 0.0], [1.0, 1.05]])


def test_projected_points_independent_of_array_length():
    rng = np.random.default_rng(0)
    poses = rng.uniform(-3, 3, size=(257, 3))
    full = projected_points(poses, 0.05)
    for i in (0, 17, 256):
        assert np.array_equal(full[i], projected_points(poses[i:i + 1], 0.05)[0])


def test_sim_params_validation():
    with pytest.raises(ValueError):
        SimParams(dt=0.0)
    with pytest.raises(ValueError):
        SimParams(collision_radius=1.5)
    assert SimParams().bounds == (-1.6, 1.6, -1.0, 1.0)


def test_clamp_to_arena():
    out = clamp_to_arena(np.array([[2.0, -3.0], [0.1, 0.2]]), SimParams(), margin=0.1)
    assert np.allclose(out, [[1.5, -0.9], [0.1, 0.2]])
