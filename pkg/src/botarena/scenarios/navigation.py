"""Robots drive to individually assigned goals.

Observation per robot: ``[x, y, theta, goal_x - x, goal_y - y]``.
"""
from __future__ import annotations

import numpy as np

from ..framework import Scenario, ScenarioConfig, register, seq_sum
from ._common import GOALS, center_dist, inset_rect, make_config, sample_points, section, spawn_inset, spawn_poses


@register
class Navigation(Scenario):
    name = "navigation"

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        return make_config(self.name, sec, extras={
            "on_goal_radius": sec["on_goal_radius"], "goal_spacing": sec["goal_spacing"]})

    def reset(self, keys, config):
        ex = config.extras
        poses = spawn_poses(keys, config)
        spacing = max(ex["goal_spacing"], 2.0 * ex["on_goal_radius"])
        rect = inset_rect(config.sim.bounds, spawn_inset(config), config)
        goals = sample_points(keys, config.num_robots, rect, spacing, GOALS)
        return poses, {"goals": goals}

    def transition(self, state, poses, actions, config, keys):
        d = center_dist(poses[..., :2], state["goals"])
        reward = config.rewards["distance"] * seq_sum(d)
        on_goal = d <= config.extras["on_goal_radius"]
        metrics = {"success": np.all(on_goal, axis=1).astype(np.float64),
                   "on_goal": on_goal.sum(axis=1).astype(np.float64)}
        return state, reward, metrics

    def observe(self, state, poses, config):
        return np.concatenate([poses, state["goals"] - poses[..., :2]], axis=-1)

    def goals(self, state, poses, config):
        return state["goals"]
