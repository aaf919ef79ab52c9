"""Colour-matched pickup (right) and delivery (left).

Observation per robot: own pose then every other robot's pose, ``3 N`` values.
"""
from __future__ import annotations

import numpy as np

from ..framework import HeterogeneitySpec, Scenario, ScenarioConfig, in_rect, register
from ._common import make_config, rect_center, section, spawn_poses

GREEN, RED = 0, 1


def robot_colors(config: ScenarioConfig) -> np.ndarray:
    return np.argmax(np.asarray(config.extras["classes"], dtype=np.float64), axis=1)


@register
class Warehouse(Scenario):
    name = "warehouse"
    counters = ("loads", "deliveries")

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        het = HeterogeneitySpec("class_id", "own", tuple(map(tuple, sec["classes"])))
        return make_config(self.name, sec, heterogeneity=het, extras={k: sec[k] for k in (
            "green_pickup", "red_pickup", "green_dropoff", "red_dropoff", "spawn_zone", "classes")})

    def _zones(self, config):
        ex = config.extras
        colors = robot_colors(config)
        pick = [ex["green_pickup"] if c == GREEN else ex["red_pickup"] for c in colors]
        drop = [ex["green_dropoff"] if c == GREEN else ex["red_dropoff"] for c in colors]
        return pick, drop

    def reset(self, keys, config):
        poses = spawn_poses(keys, config, region=config.extras["spawn_zone"])
        B, N = keys.size, config.num_robots
        return poses, {"loaded": np.zeros((B, N), dtype=bool),
                       "loads": np.zeros(B, dtype=np.int64), "deliveries": np.zeros(B, dtype=np.int64)}

    def transition(self, state, poses, actions, config, keys):
        pick, drop = self._zones(config)
        xy = poses[..., :2]
        loaded = state["loaded"].copy()
        n_load = np.zeros(poses.shape[0], dtype=np.int64)
        n_del = np.zeros(poses.shape[0], dtype=np.int64)
        for i in range(config.num_robots):
            load = ~loaded[:, i] & in_rect(xy[:, i], pick[i])
            deliver = loaded[:, i] & in_rect(xy[:, i], drop[i])
            loaded[:, i] = (loaded[:, i] | load) & ~deliver
            n_load += load
            n_del += deliver
        reward = config.rewards["load"] * n_load + config.rewards["deliver"] * n_del
        loads, deliveries = state["loads"] + n_load, state["deliveries"] + n_del
        new = {"loaded": loaded, "loads": loads, "deliveries": deliveries}
        return new, reward, {"loads": loads.astype(np.float64), "deliveries": deliveries.astype(np.float64)}

    def observe(self, state, poses, config):
        B, N, _ = poses.shape
        idx = np.array([[j for j in range(N) if j != i] for i in range(N)], dtype=np.int64).reshape(N, N - 1)
        others = poses[:, idx].reshape(B, N, 3 * (N - 1))
        return np.concatenate([poses, others], axis=-1)

    def goals(self, state, poses, config):
        pick, drop = self._zones(config)
        p = np.array([rect_center(r) for r in pick])
        d = np.array([rect_center(r) for r in drop])
        return np.where(state["loaded"][..., None], d[None], p[None])
