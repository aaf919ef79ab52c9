"""Level-based foraging: a resource is collected once the robots within
``foraging_radius`` of it have summed level at least the resource's level.

Observation per robot: ``[x, y, theta, per resource (x, y, level),
other robots relative (2 (N-1))]``; foraged resources show the sentinel
position and level 0.
"""
from __future__ import annotations

import numpy as np

from .. import rng
from ..framework import HeterogeneitySpec, Scenario, ScenarioConfig, pair_dist, register, seq_sum
from ._common import LEVELS, OBJECTS, common, make_config, others_relative, sample_points, section, spawn_poses


def robot_levels(config: ScenarioConfig) -> np.ndarray:
    return np.asarray(config.extras["levels"], dtype=np.float64)[:, 0]


@register
class Foraging(Scenario):
    name = "foraging"
    counters = ("resources_foraged",)

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        het = HeterogeneitySpec("capability_set", "full_team", tuple(map(tuple, sec["levels"])))
        return make_config(self.name, sec, heterogeneity=het, extras={k: sec[k] for k in (
            "num_resources", "foraging_radius", "resource_zone", "resource_clearance", "levels")})

    def reset(self, keys, config):
        ex = config.extras
        poses = spawn_poses(keys, config)
        M = int(ex["num_resources"])
        pos = sample_points(keys, M, ex["resource_zone"], 2.0 * ex["foraging_radius"], OBJECTS,
                            avoid=poses[..., :2], avoid_dist=ex["resource_clearance"])
        lv = np.sort(robot_levels(config))
        top = int(lv[-2:].sum())  # every resource is reachable by the two strongest robots
        level = 1 + rng.integers(rng.fold(keys, LEVELS), top, (M,))
        B = keys.size
        return poses, {"pos": pos, "level": level.astype(np.float64),
                       "foraged": np.zeros((B, M), dtype=bool), "count": np.zeros(B, dtype=np.int64)}

    def transition(self, state, poses, actions, config, keys):
        near = pair_dist(state["pos"], poses[..., :2]) <= config.extras["foraging_radius"]  # (B, M, N)
        power = seq_sum(near * robot_levels(config))
        now = ~state["foraged"] & (power >= state["level"])
        reward = config.rewards["forage"] * seq_sum(np.where(now, state["level"], 0.0))
        count = state["count"] + now.sum(axis=1)
        new = dict(state, foraged=state["foraged"] | now, count=count)
        return new, reward, {"resources_foraged": count.astype(np.float64)}

    def observe(self, state, poses, config):
        B, N, _ = poses.shape
        sentinel = np.asarray(common()["sentinel"], dtype=np.float64)
        gone = state["foraged"][..., None]
        feat = np.concatenate([np.where(gone, sentinel, state["pos"]),
                               np.where(gone, 0.0, state["level"][..., None])], axis=-1)
        return np.concatenate([poses, np.repeat(feat.reshape(B, 1, -1), N, axis=1),
                               others_relative(poses[..., :2])], axis=-1)

    def goals(self, state, poses, config):
        """Everyone converges on the lowest-index resource still on the floor."""
        left = ~state["foraged"]
        first = np.argmax(left, axis=1)
        target = state["pos"][np.arange(poses.shape[0]), first]
        target = np.where(left.any(axis=1)[:, None], target, np.nan)
        out = np.repeat(target[:, None], config.num_robots, axis=1)
        return np.where(np.isnan(out), poses[..., :2], out)
