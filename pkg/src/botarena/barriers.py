"""Barrier-certificate safety filter.

Constraints are written on single-integrator velocities ``u`` of the
projected points. For each barrier ``h >= 0`` the filter requires
``dh/dt >= -gamma * h**3`` and solves for the velocity closest to the
nominal one.

When filtering unicycle commands (:func:`apply_barrier`) the barriers act on
the projected points, so the radii are inflated by the projection distance:
pair separation by ``2 l`` and wall and obstacle clearance by ``l``. That
way, keeping the projected points safe also keeps the robot centres at
``safety_radius`` from each other and at ``boundary_margin`` from the walls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .controllers import ControllerGains, _saturate_uni, _si_to_uni_raw, _uni_to_si
from .geometry import SimParams
from .qp import QuadraticProgram, _gi_solve


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierConfig:
    safety_radius: float = 0.17
    barrier_gain: float = 100.0
    boundary_margin: float = 0.08
    enabled: bool = True
    # (cx, cy, radius) circles every robot must avoid
    static_obstacles: tuple = field(default_factory=tuple)
    qp_tolerance: float = 1e-10
    qp_max_iterations: int = 200

    def validate(self, params: SimParams) -> None:
        if self.safety_radius < params.collision_radius:
            raise ValueError("safety_radius must be >= collision_radius")
        if self.barrier_gain <= 0:
            raise ValueError("barrier_gain must be > 0")
        if self.boundary_margin < 0:
            raise ValueError("boundary_margin must be >= 0")


class BarrierResult(NamedTuple):
    commands: np.ndarray  # (N, 2) unicycle (v, omega)
    infeasible: bool


@nb.njit(cache=True, nogil=True)
def _count_rows(n, mask):
    rows = n * (n - 1) // 2 + 4 * n
    for i in range(mask.shape[0]):
        for k in range(mask.shape[1]):
            if mask[i, k]:
                rows += 1
    return rows


@nb.njit(cache=True, nogil=True)
def _build_rows(pts, pair_r, gamma, margin, xmin, xmax, ymin, ymax, obstacles, mask, obs_inflate):
    n = pts.shape[0]
    m = _count_rows(n, mask)
    A = np.zeros((m, 2 * n))
    b = np.zeros(m)
    row = 0
    r2 = pair_r * pair_r
    for i in range(n):
        for j in range(i + 1, n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < 1e-18:
                raise ValueError("coincident robot positions in barrier construction")
            h = d2 - r2
            A[row, 2 * i] = -2.0 * dx
            A[row, 2 * i + 1] = -2.0 * dy
            A[row, 2 * j] = 2.0 * dx
            A[row, 2 * j + 1] = 2.0 * dy
            b[row] = gamma * h * h * h
            row += 1
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        h = xmax - x - margin
        A[row, 2 * i] = 1.0
        b[row] = gamma * h * h * h
        row += 1
        h = x - xmin - margin
        A[row, 2 * i] = -1.0
        b[row] = gamma * h * h * h
        row += 1
        h = ymax - y - margin
        A[row, 2 * i + 1] = 1.0
        b[row] = gamma * h * h * h
        row += 1
        h = y - ymin - margin
        A[row, 2 * i + 1] = -1.0
        b[row] = gamma * h * h * h
        row += 1
    for i in range(n):
        for k in range(obstacles.shape[0]):
            if not mask[i, k]:
                continue
            dx = pts[i, 0] - obstacles[k, 0]
            dy = pts[i, 1] - obstacles[k, 1]
            rr = obstacles[k, 2] + obs_inflate
            h = dx * dx + dy * dy - rr * rr
            A[row, 2 * i] = -2.0 * dx
            A[row, 2 * i + 1] = -2.0 * dy
            b[row] = gamma * h * h * h
            row += 1
    return A, b


@nb.njit(cache=True, nogil=True)
def _filter_unicycle(poses, cmds, l, pair_r, gamma, margin, xmin, xmax, ymin, ymax,
                     obstacles, mask, v_max, w_max, tol, max_iter):
    """Filter ``cmds`` (N, 2) in place; returns the QP status code."""
    n = poses.shape[0]
    pts = np.empty((n, 2))
    u_nom = np.empty(2 * n)
    for i in range(n):
        th = poses[i, 2]
        pts[i, 0] = poses[i, 0] + l * math.cos(th)
        pts[i, 1] = poses[i, 1] + l * math.sin(th)
        v, w = _saturate_uni(cmds[i, 0], cmds[i, 1], v_max, w_max)
        ux, uy = _uni_to_si(v, w, th, l)
        u_nom[2 * i] = ux
        u_nom[2 * i + 1] = uy
    A0, b0 = _build_rows(pts, pair_r + 2.0 * l, gamma, margin + l, xmin, xmax, ymin, ymax,
                         obstacles, mask, l)
    # box keeps the QP bounded without binding any saturated nominal command
    box = math.sqrt(v_max * v_max + (l * w_max) * (l * w_max))
    m0 = A0.shape[0]
    A = np.zeros((m0 + 4 * n, 2 * n))
    b = np.empty(m0 + 4 * n)
    A[:m0] = A0
    b[:m0] = b0
    for k in range(2 * n):
        A[m0 + 2 * k, k] = 1.0
        b[m0 + 2 * k] = box
        A[m0 + 2 * k + 1, k] = -1.0
        b[m0 + 2 * k + 1] = box
    u, lam, status, it = _gi_solve(u_nom, A, b, tol, max_iter)
    if status == 1:
        for i in range(n):
            cmds[i, 0] = 0.0
            cmds[i, 1] = 0.0
        return status
    for i in range(n):
        v, w = _si_to_uni_raw(u[2 * i], u[2 * i + 1], poses[i, 2], l)
        v, w = _saturate_uni(v, w, v_max, w_max)
        cmds[i, 0] = v
        cmds[i, 1] = w
    return status


def _obstacle_arrays(obstacles, n, mask=None):
    obs = np.asarray(obstacles, dtype=np.float64).reshape(-1, 3)
    if mask is None:
        mask = np.ones((n, obs.shape[0]), dtype=np.bool_)
    return np.ascontiguousarray(obs), np.ascontiguousarray(np.asarray(mask, dtype=np.bool_).reshape(n, obs.shape[0]))


def build_barrier_constraints(positions: Sequence, config: BarrierConfig,
                              params: SimParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Constraint rows ``A u <= b`` on stacked velocities ``u = (u_0x, u_0y, u_1x, ...)``.

    Row order: one row per unordered robot pair ``(i, j)`` in lexicographic
    order, then four wall rows per robot (``+x``, ``-x``, ``+y``, ``-y``),
    then one row per robot/obstacle pair. Radii and margins are used as
    given, with no projection inflation.
    """
    params = params or SimParams()
    pts = np.ascontiguousarray(np.asarray(positions, dtype=np.float64)[:, :2])
    obs, mask = _obstacle_arrays(config.static_obstacles, pts.shape[0])
    xmin, xmax, ymin, ymax = params.bounds
    try:
        return _build_rows(pts, config.safety_radius, config.barrier_gain, config.boundary_margin,
                           xmin, xmax, ymin, ymax, obs, mask, 0.0)
    except ValueError as exc:
        raise DegenerateGeometryError(str(exc)) from None


def barrier_qp(positions, u_nom, config: BarrierConfig, params: SimParams | None = None,
               box: float | None = None) -> QuadraticProgram:
    """The filtering QP for single-integrator robots at ``positions``."""
    A, b = build_barrier_constraints(positions, config, params)
    lo = hi = None
    if box is not None:
        lo, hi = -box, box
    return QuadraticProgram(u_nom, A, b, lo, hi)


def apply_barrier(poses, nominal, config: BarrierConfig, gains: ControllerGains | None = None,
                  params: SimParams | None = None, obstacles=None, obstacle_mask=None) -> BarrierResult:
    """Minimally modify unicycle commands so every barrier stays certified.

    ``obstacles`` defaults to ``config.static_obstacles``; ``obstacle_mask``
    chooses which robot avoids which obstacle (all by default). With the
    filter disabled the nominal commands are only saturated. An infeasible
    QP yields all-zero commands and ``infeasible=True``.
    """
    gains = gains or ControllerGains()
    params = params or SimParams()
    poses = np.ascontiguousarray(np.asarray(poses, dtype=np.float64).reshape(-1, 3))
    cmds = np.array(nominal, dtype=np.float64).reshape(-1, 2)
    n = poses.shape[0]
    if not config.enabled:
        for i in range(n):
            cmds[i] = _saturate_uni(cmds[i, 0], cmds[i, 1], params.v_max, params.omega_max)
        return BarrierResult(cmds, False)
    obs, mask = _obstacle_arrays(config.static_obstacles if obstacles is None else obstacles, n, obstacle_mask)
    xmin, xmax, ymin, ymax = params.bounds
    try:
        status = _filter_unicycle(poses, cmds, gains.projection_distance, config.safety_radius,
                                  config.barrier_gain, config.boundary_margin, xmin, xmax, ymin, ymax,
                                  obs, mask, params.v_max, params.omega_max,
                                  config.qp_tolerance, config.qp_max_iterations)
    except ValueError as exc:
        raise DegenerateGeometryError(str(exc)) from None
    return BarrierResult(cmds, status == 1)
