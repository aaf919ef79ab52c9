"""Waypoint and pose controllers for unicycle robots.

Single-integrator commands are designed for a point projected
``projection_distance`` ahead of the wheel axle and mapped to ``(v, omega)``
through the near-identity diffeomorphism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb

from .geometry import PlanarVelocity, SimParams, UnicycleVelocity, _wrap


@dataclass(frozen=True)
class ControllerGains:
    k_position: float = 1.0
    projection_distance: float = 0.05
    k_rho: float = 0.4
    k_alpha: float = 1.5
    k_beta: float = -0.3
    # pose controller stops commanding inside this ball
    pose_position_tol: float = 0.01
    pose_heading_tol: float = 0.05

    def __post_init__(self):
        if self.k_position <= 0:
            raise ValueError("k_position must be > 0")
        if self.projection_distance <= 0:
            raise ValueError("projection_distance must be > 0")
        if not (self.k_rho > 0 and self.k_beta < 0 and self.k_alpha - self.k_rho > 0):
            raise ValueError("pose gains must satisfy k_rho > 0, k_beta < 0, k_alpha > k_rho")


# --- njit kernels ----------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _si_position(px, py, gx, gy, k, max_speed):
    ux = k * (gx - px)
    uy = k * (gy - py)
    n = math.sqrt(ux * ux + uy * uy)
    if n > max_speed:
        s = max_speed / n
        ux *= s
        uy *= s
    return ux, uy


@nb.njit(cache=True, nogil=True)
def _saturate_uni(v, w, v_max, w_max):
    # uniform scaling keeps the command direction, so barrier constraints
    # with non-negative right-hand sides stay satisfied
    s = 1.0
    if abs(v) > v_max:
        s = v_max / abs(v)
    if abs(w) * s > w_max:
        s = w_max / abs(w)
    return v * s, w * s


@nb.njit(cache=True, nogil=True)
def _si_to_uni_raw(ux, uy, th, l):
    c = math.cos(th)
    s = math.sin(th)
    return c * ux + s * uy, (-s * ux + c * uy) / l


@nb.njit(cache=True, nogil=True)
def _uni_to_si(v, w, th, l):
    c = math.cos(th)
    s = math.sin(th)
    return c * v - l * s * w, s * v + l * c * w


@nb.njit(cache=True, nogil=True)
def _pose_control(x, y, th, gx, gy, gth, k_rho, k_alpha, k_beta, pos_tol, head_tol, v_max, w_max):
    dx = gx - x
    dy = gy - y
    rho = math.sqrt(dx * dx + dy * dy)
    head_err = _wrap(gth - th)
    if rho <= pos_tol:
        if abs(head_err) <= head_tol:
            return 0.0, 0.0
        # final alignment: polar angles are undefined at the goal
        return _saturate_uni(0.0, k_alpha * head_err, v_max, w_max)
    alpha = _wrap(math.atan2(dy, dx) - th)
    beta = _wrap(gth - th - alpha)
    v = k_rho * rho
    w = k_alpha * alpha + k_beta * beta
    if v > v_max:
        v = v_max
    if w > w_max:
        w = w_max
    elif w < -w_max:
        w = -w_max
    return v, w


@nb.njit(cache=True, nogil=True)
def _position_waypoint(x, y, th, gx, gy, k, l, si_max, v_max, w_max):
    px = x + l * math.cos(th)
    py = y + l * math.sin(th)
    ux, uy = _si_position(px, py, gx, gy, k, si_max)
    v, w = _si_to_uni_raw(ux, uy, th, l)
    return _saturate_uni(v, w, v_max, w_max)


# --- public API ------------------------------------------------------------

def si_position_controller(position, goal, gains: ControllerGains, si_max_speed: float) -> PlanarVelocity:
    """Proportional single-integrator law ``k (goal - position)``, norm-limited."""
    (px, py), (gx, gy) = position, goal
    return PlanarVelocity(*_si_position(float(px), float(py), float(gx), float(gy),
                                        gains.k_position, float(si_max_speed)))


def si_to_uni(si_vel, pose, gains: ControllerGains, params: SimParams | None = None,
              *, saturate: bool = True) -> UnicycleVelocity:
    """Map a projected-point velocity to unicycle ``(v, omega)``.

    With ``saturate`` the result is scaled uniformly so that both
    ``|v| <= v_max`` and ``|omega| <= omega_max`` hold.
    """
    params = params or SimParams()
    v, w = _si_to_uni_raw(float(si_vel[0]), float(si_vel[1]), float(pose[2]), gains.projection_distance)
    if saturate:
        v, w = _saturate_uni(v, w, params.v_max, params.omega_max)
    return UnicycleVelocity(v, w)


def uni_to_si(cmd, pose, gains: ControllerGains) -> PlanarVelocity:
    """Velocity of the projected point produced by a unicycle command (inverse of :func:`si_to_uni`)."""
    return PlanarVelocity(*_uni_to_si(float(cmd[0]), float(cmd[1]), float(pose[2]), gains.projection_distance))


def unicycle_pose_controller(pose, goal_pose, gains: ControllerGains,
                             params: SimParams | None = None) -> UnicycleVelocity:
    """Polar-coordinate pose regulator.

    ``v = k_rho * rho`` and ``omega = k_alpha * alpha + k_beta * beta``,
    clipped to the platform limits. Once within ``pose_position_tol`` of the
    goal position the robot only turns, and it stops entirely when the
    heading error also drops below ``pose_heading_tol``.
    """
    params = params or SimParams()
    return UnicycleVelocity(*_pose_control(
        float(pose[0]), float(pose[1]), float(pose[2]),
        float(goal_pose[0]), float(goal_pose[1]), float(goal_pose[2]),
        gains.k_rho, gains.k_alpha, gains.k_beta, gains.pose_position_tol, gains.pose_heading_tol,
        params.v_max, params.omega_max))


def position_waypoint_controller(pose, waypoint, gains: ControllerGains,
                                 params: SimParams | None = None) -> UnicycleVelocity:
    """Drive the projected point of ``pose`` towards ``waypoint``."""
    params = params or SimParams()
    return UnicycleVelocity(*_position_waypoint(
        float(pose[0]), float(pose[1]), float(pose[2]), float(waypoint[0]), float(waypoint[1]),
        gains.k_position, gains.projection_distance, params.si_max_speed, params.v_max, params.omega_max))
