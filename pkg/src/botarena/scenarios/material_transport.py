"""Empty two loading zones into a dropoff zone with robots of different capacity.

A robot with an empty load inside a non-empty loading zone takes
``min(capacity, remaining)``; a loaded robot inside the dropoff zone unloads
everything. Robots are processed in index order within a step.

Observation per robot: ``[x, y, theta, load, circle remaining, rectangle
remaining, other robots relative (2 (N-1))]``.
"""
from __future__ import annotations

import numpy as np

from ..framework import HeterogeneitySpec, Scenario, ScenarioConfig, in_rect, register
from ._common import AMOUNTS, center_dist, make_config, others_relative, rect_center, rounded_normal, section, spawn_poses


def capacities(config: ScenarioConfig) -> np.ndarray:
    return np.asarray(config.extras["capabilities"], dtype=np.float64)[:, 1]


@register
class MaterialTransport(Scenario):
    name = "material_transport"
    counters = ("delivered",)

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        caps = sec["capabilities"]
        het = HeterogeneitySpec("capability_set", "full_team", tuple(map(tuple, caps)))
        return make_config(self.name, sec, step_sizes=[c[0] for c in caps], heterogeneity=het,
                           extras={k: sec[k] for k in (
                               "dropoff_zone", "circle_zone", "rect_zone", "circle_mean", "circle_variance",
                               "rect_mean", "rect_variance", "capabilities")})

    def reset(self, keys, config):
        ex = config.extras
        poses = spawn_poses(keys, config, region=ex["dropoff_zone"])
        B, N = keys.size, config.num_robots
        circle = rounded_normal(keys, AMOUNTS, ex["circle_mean"], ex["circle_variance"])
        rect = rounded_normal(keys, AMOUNTS + 100, ex["rect_mean"], ex["rect_variance"])
        return poses, {"circle": circle, "rect": rect, "load": np.zeros((B, N)),
                       "delivered": np.zeros(B), "initial": circle + rect}

    def transition(self, state, poses, actions, config, keys):
        ex = config.extras
        xy = poses[..., :2]
        cx, cy, cr = ex["circle_zone"]
        in_circle = center_dist(xy, np.array([cx, cy])) <= cr
        in_box = in_rect(xy, ex["rect_zone"])
        in_drop = in_rect(xy, ex["dropoff_zone"])
        cap = capacities(config)
        circle, rect = state["circle"].astype(np.float64), state["rect"].astype(np.float64)
        load = state["load"].astype(np.float64)
        loaded = np.zeros(poses.shape[0])
        dropped = np.zeros(poses.shape[0])
        for i in range(config.num_robots):
            empty = load[:, i] == 0
            take = np.where(empty & in_circle[:, i], np.minimum(cap[i], circle), 0.0)
            circle -= take
            load[:, i] += take
            loaded += take
            take = np.where(empty & in_box[:, i], np.minimum(cap[i], rect), 0.0)
            rect -= take
            load[:, i] += take
            loaded += take
            drop = np.where(in_drop[:, i], load[:, i], 0.0)
            load[:, i] -= drop
            dropped += drop
        delivered = state["delivered"] + dropped
        pending = (circle > 0) | (rect > 0)
        r = config.rewards
        reward = r["load"] * loaded + r["dropoff"] * dropped + r["step"] * pending
        new = {"circle": circle, "rect": rect, "load": load, "delivered": delivered, "initial": state["initial"]}
        return new, reward, {"delivered": delivered, "remaining": circle + rect}

    def observe(self, state, poses, config):
        N = config.num_robots
        zone = np.stack([state["circle"], state["rect"]], axis=-1)
        return np.concatenate([poses, state["load"][..., None], np.repeat(zone[:, None], N, axis=1),
                               others_relative(poses[..., :2])], axis=-1)

    def goals(self, state, poses, config):
        ex = config.extras
        xy = poses[..., :2]
        circ = np.array(ex["circle_zone"][:2], dtype=np.float64)
        box = rect_center(ex["rect_zone"])
        dc = np.where((state["circle"] > 0)[:, None], center_dist(xy, circ), np.inf)
        db = np.where((state["rect"] > 0)[:, None], center_dist(xy, box), np.inf)
        fetch = np.where((dc <= db)[..., None], circ, box)
        fetch = np.where(np.isfinite(np.minimum(dc, db))[..., None], fetch, xy)
        return np.where((state["load"] > 0)[..., None], rect_center(ex["dropoff_zone"]), fetch)
