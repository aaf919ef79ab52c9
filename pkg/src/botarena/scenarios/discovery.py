"""Sensing robots reveal landmarks, tagging robots remove them.

A landmark is sensed when within a sensing robot's radius and tagged when
within a tagging robot's radius; tagging does not require prior sensing.
Tagged landmarks earn nothing further.

Observation per robot: ``[x, y, theta, per landmark (x, y), other robots
relative (2 (N-1))]``; landmarks that are unsensed or tagged show the
sentinel position.
"""
from __future__ import annotations

import numpy as np

from ..framework import HeterogeneitySpec, Scenario, ScenarioConfig, pair_dist, register
from ._common import OBJECTS, common, make_config, others_relative, sample_points, section, spawn_poses


def radii(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    cap = np.asarray(config.extras["capabilities"], dtype=np.float64)
    return cap[:, 0], cap[:, 1]


@register
class Discovery(Scenario):
    name = "discovery"
    counters = ("landmarks_sensed", "landmarks_tagged")

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        het = HeterogeneitySpec("capability_set", "full_team", tuple(map(tuple, sec["capabilities"])))
        return make_config(self.name, sec, heterogeneity=het, extras={k: sec[k] for k in (
            "num_landmarks", "landmark_zone", "landmark_spacing", "capabilities")})

    def reset(self, keys, config):
        ex = config.extras
        poses = spawn_poses(keys, config)
        sense, tag = radii(config)
        K = int(ex["num_landmarks"])
        # nothing is in range at reset
        clear = float(max(sense.max(), tag.max())) + 0.05
        marks = sample_points(keys, K, ex["landmark_zone"], ex["landmark_spacing"], OBJECTS,
                              avoid=poses[..., :2], avoid_dist=clear)
        B = keys.size
        return poses, {"landmarks": marks, "sensed": np.zeros((B, K), dtype=bool),
                       "tagged": np.zeros((B, K), dtype=bool)}

    def transition(self, state, poses, actions, config, keys):
        sense, tag = radii(config)
        d = pair_dist(state["landmarks"], poses[..., :2])                  # (B, K, N)
        near_s = np.any((d <= sense) & (sense > 0), axis=-1)
        near_t = np.any((d <= tag) & (tag > 0), axis=-1)
        tagged0 = state["tagged"]
        new_s = near_s & ~state["sensed"] & ~tagged0
        new_t = near_t & ~tagged0
        sensed = state["sensed"] | new_s
        tagged = tagged0 | new_t
        r = config.rewards
        pending = ~np.all(tagged, axis=1)
        reward = r["sense"] * new_s.sum(axis=1) + r["tag"] * new_t.sum(axis=1) + r["step"] * pending
        new = dict(state, sensed=sensed, tagged=tagged)
        return new, reward, {"landmarks_sensed": sensed.sum(axis=1).astype(np.float64),
                             "landmarks_tagged": tagged.sum(axis=1).astype(np.float64)}

    def observe(self, state, poses, config):
        B, N, _ = poses.shape
        sentinel = np.asarray(common()["sentinel"], dtype=np.float64)
        show = (state["sensed"] & ~state["tagged"])[..., None]
        marks = np.where(show, state["landmarks"], sentinel).reshape(B, 1, -1)
        return np.concatenate([poses, np.repeat(marks, N, axis=1), others_relative(poses[..., :2])], axis=-1)

    def goals(self, state, poses, config):
        """Scripted targets using the true landmark map: sensors head for the
        nearest unsensed landmark, taggers for the nearest sensed one (or any
        untagged one when none is sensed)."""
        sense, tag = radii(config)
        xy = poses[..., :2]
        d = pair_dist(xy, state["landmarks"])                              # (B, N, K)
        live = ~state["tagged"]
        rows = np.arange(xy.shape[0])[:, None]

        def nearest(mask):
            dm = np.where(mask[:, None, :], d, np.inf)
            pick = state["landmarks"][rows, np.argmin(dm, axis=-1)]
            return np.where(np.isfinite(dm.min(axis=-1))[..., None], pick, xy)

        for_sense = nearest(live & ~state["sensed"])
        seen = live & state["sensed"]
        for_tag = np.where(seen.any(axis=1)[:, None, None], nearest(seen), nearest(live))
        return np.where((sense > 0)[None, :, None], for_sense, for_tag)
