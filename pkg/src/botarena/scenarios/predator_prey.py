"""Robots tag a faster, scripted prey.

Observation per robot: ``[x, y, theta, prey - position (2), other robots
relative (2 (N-1))]``.
"""
from __future__ import annotations

import math

import numpy as np

from ..framework import Scenario, ScenarioConfig, pair_dist, register
from ._common import PREY, center_dist, make_config, others_relative, sample_points, section, spawn_poses

_D = math.sqrt(0.5)
# stay, E, NE, N, NW, W, SW, S, SE
PREY_CANDIDATES = np.array([[0, 0], [1, 0], [_D, _D], [0, 1], [-_D, _D],
                            [-1, 0], [-_D, -_D], [0, -1], [_D, -_D]], dtype=np.float64)


def prey_heuristic_batch(prey: np.ndarray, predators: np.ndarray, prey_step: float, bounds) -> np.ndarray:
    """Move each prey ``(B, 2)`` to the in-arena candidate farthest from its nearest predator."""
    xmin, xmax, ymin, ymax = bounds
    cand = prey[:, None, :] + prey_step * PREY_CANDIDATES[None]           # (B, 9, 2)
    inside = ((cand[..., 0] >= xmin) & (cand[..., 0] <= xmax)
              & (cand[..., 1] >= ymin) & (cand[..., 1] <= ymax))
    score = pair_dist(cand, predators).min(axis=-1)                        # (B, 9)
    score = np.where(inside, score, -np.inf)
    best = np.argmax(score, axis=1)                                        # first max wins ties
    return cand[np.arange(prey.shape[0]), best]


def prey_heuristic(prey, predators, prey_step: float, bounds=(-1.6, 1.6, -1.0, 1.0)) -> np.ndarray:
    """Single-instance form of :func:`prey_heuristic_batch`."""
    prey = np.asarray(prey, dtype=np.float64).reshape(1, 2)
    predators = np.asarray(predators, dtype=np.float64).reshape(1, -1, 2)
    return prey_heuristic_batch(prey, predators, prey_step, bounds)[0]


def prey_step_length(config: ScenarioConfig) -> float:
    """Prey travel per environment step: a multiple of what a robot can cover."""
    reach = config.sim.si_max_speed * config.sim.dt * config.sub_steps
    return config.extras["prey_step_ratio"] * min(max(config.step_sizes), reach)


@register
class PredatorPrey(Scenario):
    name = "predator_prey"
    counters = ("tags",)

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        return make_config(self.name, sec, extras={k: sec[k] for k in (
            "tag_radius", "prey_step_ratio", "prey_spawn_clearance", "flash_steps")})

    def reset(self, keys, config):
        poses = spawn_poses(keys, config)
        m = config.barrier.boundary_margin
        W, H = config.sim.arena_half_width - m, config.sim.arena_half_height - m
        prey = sample_points(keys, 1, (-W, W, -H, H), 0.0, PREY, avoid=poses[..., :2],
                             avoid_dist=config.extras["prey_spawn_clearance"])[:, 0]
        B = keys.size
        return poses, {"prey": prey, "tags": np.zeros(B, dtype=np.int64),
                       "flash": np.zeros(B, dtype=np.int64)}

    def transition(self, state, poses, actions, config, keys):
        ex = config.extras
        d = center_dist(poses[..., :2], state["prey"][:, None, :])
        tag = np.any(d <= ex["tag_radius"], axis=1)
        reward = config.rewards["tag"] * tag
        tags = state["tags"] + tag
        flash = np.where(tag, int(ex["flash_steps"]), np.maximum(state["flash"] - 1, 0))
        prey = prey_heuristic_batch(state["prey"], poses[..., :2], prey_step_length(config), config.sim.bounds)
        new = {"prey": prey, "tags": tags, "flash": flash}
        return new, reward, {"tags": tags.astype(np.float64), "tagged": tag.astype(np.float64)}

    def observe(self, state, poses, config):
        rel = state["prey"][:, None, :] - poses[..., :2]
        return np.concatenate([poses, rel, others_relative(poses[..., :2])], axis=-1)

    def goals(self, state, poses, config):
        return np.repeat(state["prey"][:, None, :], config.num_robots, axis=1)
