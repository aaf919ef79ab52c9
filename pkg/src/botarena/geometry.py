"""Unicycle kinematics, angle arithmetic and arena geometry.

Poses are stored as ``(x, y, theta)`` float64 triples. The njit kernels in
this module are the single implementation used both by the public helpers
and by the batched physics loop in :mod:`botarena.engine`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

PI = math.pi
TWO_PI = 2.0 * math.pi


class RobotPose(NamedTuple):
    x: float
    y: float
    theta: float


class UnicycleVelocity(NamedTuple):
    v: float
    omega: float


class PlanarVelocity(NamedTuple):
    vx: float
    vy: float


@dataclass(frozen=True)
class SimParams:
    """Physical constants shared by every scenario.

    Defaults describe a GRITSBot-scale robot on a 3.2 m x 2.0 m testbed
    stepped at 30 Hz.
    """

    dt: float = 0.033
    v_max: float = 0.2
    omega_max: float = 3.6
    si_max_speed: float = 0.15
    arena_half_width: float = 1.6
    arena_half_height: float = 1.0
    collision_radius: float = 0.135

    def __post_init__(self):
        for name in ("dt", "v_max", "omega_max", "si_max_speed",
                     "arena_half_width", "arena_half_height", "collision_radius"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"SimParams.{name} must be finite and > 0, got {value!r}")
        if self.collision_radius >= min(self.arena_half_width, self.arena_half_height):
            raise ValueError("collision_radius must be smaller than both arena half-extents")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """``(xmin, xmax, ymin, ymax)`` of the arena rectangle."""
        return (-self.arena_half_width, self.arena_half_width,
                -self.arena_half_height, self.arena_half_height)


@nb.njit(cache=True, nogil=True)
def _wrap(theta):
    if -PI < theta <= PI:
        return theta
    r = theta - TWO_PI * math.floor(theta / TWO_PI)  # [0, 2pi)
    if r > PI:
        r -= TWO_PI
    if r <= -PI:
        r += TWO_PI
    return r


@nb.njit(cache=True, nogil=True)
def _euler_step(x, y, th, v, w, dt):
    return x + v * math.cos(th) * dt, y + v * math.sin(th) * dt, _wrap(th + w * dt)


def wrap_angle(theta: float) -> float:
    """Wrap an angle to ``(-pi, pi]``.

    >>> wrap_angle(3 * math.pi) == math.pi
    True
    >>> wrap_angle(-math.pi) == math.pi
    True
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    return float(_wrap(theta))


def step_unicycle(pose, cmd, dt: float) -> RobotPose:
    """Advance one pose by one explicit-Euler step of the unicycle model."""
    x, y, th = pose
    v, w = cmd
    return RobotPose(*_euler_step(float(x), float(y), float(th), float(v), float(w), float(dt)))


@nb.njit(cache=True, nogil=True)
def _pairwise(xy):
    n = xy.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dx = xy[i, 0] - xy[j, 0]
            dy = xy[i, 1] - xy[j, 1]
            d = math.sqrt(dx * dx + dy * dy)
            out[i, j] = d
            out[j, i] = d
    return out


def pairwise_distances(poses: Sequence) -> np.ndarray:
    """Symmetric matrix of Euclidean distances between robot positions."""
    xy = np.asarray(poses, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[0] < 1 or xy.shape[1] < 2:
        raise ValueError("expected a non-empty (N, 2) or (N, 3) array of poses")
    return _pairwise(np.ascontiguousarray(xy[:, :2]))


@nb.njit(cache=True, nogil=True)
def _project(flat, l):
    out = np.empty((flat.shape[0], 2))
    for i in range(flat.shape[0]):
        out[i, 0] = flat[i, 0] + l * math.cos(flat[i, 2])
        out[i, 1] = flat[i, 1] + l * math.sin(flat[i, 2])
    return out


def projected_points(poses: np.ndarray, distance: float) -> np.ndarray:
    """Points ``distance`` ahead of each robot along its heading; shape ``(..., 2)``.

    Uses libm trig element by element (not numpy's SIMD loops) so a pose
    maps to the same bits whatever array it sits in.
    """
    poses = np.asarray(poses, dtype=np.float64)
    flat = np.ascontiguousarray(poses.reshape(-1, 3))
    return _project(flat, float(distance)).reshape(poses.shape[:-1] + (2,))


def clamp_to_arena(xy: np.ndarray, params: SimParams, margin: float = 0.0) -> np.ndarray:
    """Clip positions into the arena rectangle shrunk by ``margin``."""
    xy = np.array(xy, dtype=np.float64, copy=True)
    xy[..., 0] = np.clip(xy[..., 0], -params.arena_half_width + margin, params.arena_half_width - margin)
    xy[..., 1] = np.clip(xy[..., 1], -params.arena_half_height + margin, params.arena_half_height - margin)
    return xy
