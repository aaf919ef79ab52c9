"""Drones scout a tiled map while an ice robot and a water robot cross it.

The arena is split into ``grid_cols x grid_rows`` tiles, row 0 at the
bottom: the first and last columns are ground, every other tile is ice or
water. Traversal robots move at the fast step on their own terrain, the
slow step on the other one and the normal step on ground; drones always use
the normal step.

Observation per robot: ``[x, y, theta, tile under robot, other robots
relative (2 (N-1)), 3x3 tile patch around each drone (9 per drone)]``
with ``-1`` for patch cells outside the grid.
"""
from __future__ import annotations

import numpy as np

from .. import rng
from ..framework import HeterogeneitySpec, Scenario, ScenarioConfig, dist_to_rect, in_rect, register, seq_sum
from ._common import TILES, make_config, others_relative, section, spawn_poses

GROUND, ICE, WATER = 0, 1, 2
DRONE, WATER_ROBOT, ICE_ROBOT = 0, 1, 2


def robot_classes(config: ScenarioConfig) -> np.ndarray:
    return np.argmax(np.asarray(config.extras["classes"], dtype=np.float64), axis=1)


def tile_index(xy: np.ndarray, config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(row, col)`` of the tile containing each point; total over the plane."""
    ex, sim = config.extras, config.sim
    cols, rows = int(ex["grid_cols"]), int(ex["grid_rows"])
    cw = 2.0 * sim.arena_half_width / cols
    ch = 2.0 * sim.arena_half_height / rows
    c = np.clip(np.floor((xy[..., 0] + sim.arena_half_width) / cw), 0, cols - 1).astype(np.int64)
    r = np.clip(np.floor((xy[..., 1] + sim.arena_half_height) / ch), 0, rows - 1).astype(np.int64)
    return r, c


def tiles_at(tiles: np.ndarray, xy: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    """Tile codes under points ``(B, P, 2)`` given grids ``(B, rows, cols)``."""
    r, c = tile_index(xy, config)
    return tiles[np.arange(tiles.shape[0])[:, None], r, c]


@register
class ArcticTransport(Scenario):
    name = "arctic_transport"

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        het = HeterogeneitySpec("class_id", "own", tuple(map(tuple, sec["classes"])))
        sec["step_size"] = sec["normal_step"]
        return make_config(self.name, sec, heterogeneity=het, extras={k: sec[k] for k in (
            "normal_step", "fast_step", "slow_step", "grid_cols", "grid_rows", "ice_probability",
            "goal_zone", "spawn_zone", "classes")})

    def reset(self, keys, config):
        ex = config.extras
        rows, cols = int(ex["grid_rows"]), int(ex["grid_cols"])
        u = rng.uniform(rng.fold(keys, TILES), (rows, cols))
        tiles = np.where(u < ex["ice_probability"], ICE, WATER).astype(np.int64)
        tiles[:, :, 0] = GROUND
        tiles[:, :, -1] = GROUND
        poses = spawn_poses(keys, config, region=ex["spawn_zone"])
        return poses, {"tiles": tiles}

    def step_sizes(self, state, poses, config):
        ex = config.extras
        cls = robot_classes(config)
        tile = tiles_at(state["tiles"], poses[..., :2], config)
        own = np.where(cls == WATER_ROBOT, WATER, ICE)
        other = np.where(cls == WATER_ROBOT, ICE, WATER)
        step = np.full(tile.shape, float(ex["normal_step"]))
        step = np.where(tile == own, ex["fast_step"], step)
        step = np.where(tile == other, ex["slow_step"], step)
        return np.where(cls == DRONE, float(ex["normal_step"]), step)

    def transition(self, state, poses, actions, config, keys):
        goal = config.extras["goal_zone"]
        movers = robot_classes(config) != DRONE
        xy = poses[:, movers, :2]
        d = dist_to_rect(xy, goal)
        arrived = np.all(in_rect(xy, goal), axis=1)
        r = config.rewards
        reward = r["distance"] * seq_sum(d) + r["step"] * ~arrived
        return state, reward, {"success": arrived.astype(np.float64)}

    def observe(self, state, poses, config):
        B, N, _ = poses.shape
        tiles = state["tiles"]
        rows, cols = tiles.shape[1:]
        own = tiles_at(tiles, poses[..., :2], config).astype(np.float64)
        drones = np.flatnonzero(robot_classes(config) == DRONE)
        r, c = tile_index(poses[:, drones, :2], config)                    # (B, D)
        dr, dc = np.meshgrid([-1, 0, 1], [-1, 0, 1], indexing="ij")
        pr = r[..., None] + dr.ravel()                                     # (B, D, 9), row-major patch
        pc = c[..., None] + dc.ravel()
        valid = (pr >= 0) & (pr < rows) & (pc >= 0) & (pc < cols)
        patch = tiles[np.arange(B)[:, None, None], np.clip(pr, 0, rows - 1), np.clip(pc, 0, cols - 1)]
        patch = np.where(valid, patch, -1).astype(np.float64).reshape(B, 1, -1)
        return np.concatenate([poses, own[..., None], others_relative(poses[..., :2]),
                               np.repeat(patch, N, axis=1)], axis=-1)

    def goals(self, state, poses, config):
        """Traversal robots head straight right into the goal zone; each drone
        shadows a traversal robot one tile ahead of it."""
        goal = config.extras["goal_zone"]
        cls = robot_classes(config)
        xy = poses[..., :2]
        gx = (goal[0] + goal[1]) / 2
        out = xy.copy()
        out[..., 0] = np.where(cls != DRONE, gx, out[..., 0])
        movers = np.flatnonzero(cls != DRONE)
        cw = 2.0 * config.sim.arena_half_width / int(config.extras["grid_cols"])
        for k, i in enumerate(np.flatnonzero(cls == DRONE)):
            if movers.size:
                lead = xy[:, movers[k % movers.size]]
                out[:, i, 0] = np.minimum(lead[:, 0] + cw, gx)
                out[:, i, 1] = lead[:, 1]
        return out
