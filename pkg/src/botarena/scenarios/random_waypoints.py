"""Each robot drives to a random waypoint and gets a new one on arrival.

Actions are ignored: the position controller chases the current waypoint.
Observation per robot: ``[x, y, theta, waypoint - control point (2)]``.
``mode = "crossing"`` mirrors each new waypoint through the arena centre
(plus jitter), which sends robots straight through each other.
"""
from __future__ import annotations

import numpy as np

from .. import rng
from ..framework import ConfigError, Scenario, ScenarioConfig, control_points, register
from ._common import WAYPOINTS, center_dist, make_config, section, spawn_poses


def _draw_waypoints(keys, pts, config: ScenarioConfig):
    ex = config.extras
    inset = ex["waypoint_inset"]
    W, H = config.sim.arena_half_width - inset, config.sim.arena_half_height - inset
    u = rng.uniform(keys, pts.shape[1:], -1.0, 1.0)            # (B, N, 2) in [-1, 1)
    if ex["mode"] == "crossing":
        j = ex["crossing_jitter"]
        wp = -pts + j * u
        wp[..., 0] = np.clip(wp[..., 0], -W, W)
        wp[..., 1] = np.clip(wp[..., 1], -H, H)
        return wp
    return u * np.array([W, H])


@register
class RandomWaypoints(Scenario):
    name = "random_waypoints"
    counters = ("waypoints_reached",)

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        return make_config(self.name, sec, extras={k: sec[k] for k in (
            "arrival_tolerance", "waypoint_inset", "crossing_jitter", "mode")})

    def reset(self, keys, config):
        if config.extras["mode"] not in ("uniform", "crossing"):
            raise ConfigError(f"unknown waypoint mode {config.extras['mode']!r}")
        poses = spawn_poses(keys, config)
        wp = _draw_waypoints(rng.fold(keys, WAYPOINTS), control_points(poses, config), config)
        return poses, {"waypoints": wp, "reached": np.zeros(keys.size, dtype=np.int64)}

    def targets(self, state, poses, actions, config, keys):
        return state["waypoints"]

    def transition(self, state, poses, actions, config, keys):
        pts = control_points(poses, config)
        arrived = center_dist(pts, state["waypoints"]) <= config.extras["arrival_tolerance"]
        fresh = _draw_waypoints(rng.fold(keys, WAYPOINTS), pts, config)
        wp = np.where(arrived[..., None], fresh, state["waypoints"])
        reached = state["reached"] + arrived.sum(axis=1)
        new = {"waypoints": wp, "reached": reached}
        return new, np.zeros(poses.shape[0]), {"waypoints_reached": reached.astype(np.float64)}

    def observe(self, state, poses, config):
        return np.concatenate([poses, state["waypoints"] - control_points(poses, config)], axis=-1)

    def goals(self, state, poses, config):
        return state["waypoints"]
