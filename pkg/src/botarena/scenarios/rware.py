"""Ferry requested shelves from a staging grid to the dropoff zone.

Slots are ordered row by row (``slot_ys`` outer, ``slot_xs`` inner). Events
fire when a robot centre *enters* a slot or the dropoff zone:

* an empty-handed robot entering an occupied slot picks up its shelf;
* a carrying robot entering an empty slot puts its shelf back;
* a robot carrying a requested shelf entering the dropoff zone scores, and
  that request entry is redrawn from the shelves not currently requested.

Carrying robots treat every staged shelf as a circular obstacle.

Observation per robot: ``[x, y, theta, carried id, other robots relative
(2 (N-1)), per slot (x, y, shelf id), request ids]``; ``-1`` marks "none".
"""
from __future__ import annotations

import numpy as np

from .. import rng
from ..framework import ConfigError, Scenario, ScenarioConfig, control_points, in_rect, register
from ._common import OBJECTS, REQUESTS, center_dist, make_config, others_relative, rect_center, section, spawn_poses


def slot_positions(config: ScenarioConfig) -> np.ndarray:
    ex = config.extras
    return np.array([[x, y] for y in ex["slot_ys"] for x in ex["slot_xs"]], dtype=np.float64)


def slot_index(xy: np.ndarray, slots: np.ndarray, half: float) -> np.ndarray:
    """Index of the slot whose square contains each point, else -1."""
    inside = np.all(np.abs(xy[..., None, :] - slots) <= half, axis=-1)     # (..., S)
    return np.where(inside.any(axis=-1), np.argmax(inside, axis=-1), -1)


def non_requested(requests: np.ndarray, num_shelves: int) -> np.ndarray:
    """Sorted shelf ids absent from each request row, ``(B, K - R)``."""
    ids = np.arange(num_shelves)
    mask = ~np.any(requests[..., None] == ids, axis=-2)                    # (B, K)
    return np.stack([ids[m] for m in mask]) if len(mask) else np.zeros((0, num_shelves - requests.shape[-1]), int)


@register
class Rware(Scenario):
    name = "rware"
    counters = ("shelf_dropoffs",)

    def default_config(self) -> ScenarioConfig:
        sec = section(self.name)
        return make_config(self.name, sec, extras={k: sec[k] for k in (
            "num_shelves", "request_size", "slot_xs", "slot_ys", "slot_half_size",
            "shelf_radius", "dropoff_zone", "spawn_zone")})

    def reset(self, keys, config):
        ex = config.extras
        slots = slot_positions(config)
        S, K, R = len(slots), int(ex["num_shelves"]), int(ex["request_size"])
        if not 0 < R < K <= S:
            raise ConfigError("rware needs 0 < request_size < num_shelves <= number of slots")
        poses = spawn_poses(keys, config, region=ex["spawn_zone"])
        B, N = keys.size, config.num_robots
        order = np.argsort(rng.uniform(rng.fold(keys, OBJECTS), (S,)), axis=1, kind="stable")
        slot_shelf = np.full((B, S), -1, dtype=np.int64)
        np.put_along_axis(slot_shelf, order[:, :K], np.arange(K)[None].repeat(B, 0), axis=1)
        requests = np.argsort(rng.uniform(rng.fold(keys, REQUESTS), (K,)), axis=1, kind="stable")[:, :R]
        xy = poses[..., :2]
        return poses, {
            "slot_shelf": slot_shelf,
            "carried": np.full((B, N), -1, dtype=np.int64),
            "requests": requests.astype(np.int64),
            "prev_slot": slot_index(xy, slots, ex["slot_half_size"]),
            "prev_drop": in_rect(xy, ex["dropoff_zone"]),
            "dropoffs": np.zeros(B, dtype=np.int64),
        }

    def obstacles(self, state, config, batch):
        slots = slot_positions(config)
        obs = np.empty((batch, len(slots), 3))
        obs[..., :2] = slots
        obs[..., 2] = config.extras["shelf_radius"]
        mask = (state["carried"] >= 0)[:, :, None] & (state["slot_shelf"] >= 0)[:, None, :]
        return obs, mask

    def transition(self, state, poses, actions, config, keys):
        ex = config.extras
        slots = slot_positions(config)
        K = int(ex["num_shelves"])
        xy = poses[..., :2]
        cur_slot = slot_index(xy, slots, ex["slot_half_size"])
        in_drop = in_rect(xy, ex["dropoff_zone"])
        entered_slot = (cur_slot >= 0) & (cur_slot != state["prev_slot"])
        entered_drop = in_drop & ~state["prev_drop"]
        slot_shelf = state["slot_shelf"].copy()
        carried = state["carried"].copy()
        requests = state["requests"].copy()
        B = poses.shape[0]
        rows = np.arange(B)
        scored = np.zeros(B, dtype=np.int64)
        for i in range(config.num_robots):
            s = np.maximum(cur_slot[:, i], 0)
            occupant = slot_shelf[rows, s]
            held = carried[:, i]
            pick = entered_slot[:, i] & (held < 0) & (occupant >= 0)
            ret = entered_slot[:, i] & (held >= 0) & (occupant < 0)
            slot_shelf[rows[pick], s[pick]] = -1
            slot_shelf[rows[ret], s[ret]] = held[ret]
            held = np.where(pick, occupant, np.where(ret, -1, held))
            carried[:, i] = held
            hit = requests == held[:, None]                                # (B, R)
            score = entered_drop[:, i] & (held >= 0) & hit.any(axis=1)
            if score.any():
                pool = non_requested(requests, K)
                pick_idx = rng.integers(rng.fold(keys, REQUESTS, i), pool.shape[1])
                fresh = pool[rows, pick_idx]
                entry = np.argmax(hit, axis=1)
                requests[rows[score], entry[score]] = fresh[score]
            scored += score
        dropoffs = state["dropoffs"] + scored
        new = {"slot_shelf": slot_shelf, "carried": carried, "requests": requests,
               "prev_slot": cur_slot, "prev_drop": in_drop, "dropoffs": dropoffs}
        reward = config.rewards["dropoff"] * scored
        return new, reward, {"shelf_dropoffs": dropoffs.astype(np.float64)}

    def observe(self, state, poses, config):
        B, N, _ = poses.shape
        slots = slot_positions(config)
        slot_feat = np.concatenate([np.broadcast_to(slots, (B,) + slots.shape),
                                    state["slot_shelf"][..., None].astype(np.float64)], axis=-1)
        shared = np.concatenate([slot_feat.reshape(B, -1), state["requests"].astype(np.float64)], axis=-1)
        return np.concatenate([poses, state["carried"][..., None].astype(np.float64),
                               others_relative(poses[..., :2]),
                               np.repeat(shared[:, None], N, axis=1)], axis=-1)

    def goals(self, state, poses, config):
        """Scripted targets. Empty-handed robots each claim a different
        requested shelf (nearest first, in robot order), a robot holding a
        requested shelf heads for the dropoff, one holding anything else puts
        it back in an empty slot, and robots with nothing to do move out of
        the way. Routes follow one-way lanes beside the slot rows."""
        ex = config.extras
        slots = slot_positions(config)
        router = _Router(config)
        drop = rect_center(ex["dropoff_zone"])
        xy = control_points(poses, config)
        # idle robots wait in the corners beside the dropoff, clear of the lanes
        park = config.sim.arena_half_height - config.barrier.boundary_margin - config.gains.projection_distance - 0.05
        out = xy.copy()
        for b in range(xy.shape[0]):
            occ = state["slot_shelf"][b]
            req = set(int(r) for r in state["requests"][b])
            open_ = [s for s in range(len(slots)) if occ[s] >= 0 and int(occ[s]) in req]
            for i in range(xy.shape[1]):
                x, y = xy[b, i]
                held = int(state["carried"][b, i])

                def nearest(cands):
                    return min(cands, key=lambda s: (slots[s, 0] - x) ** 2 + (slots[s, 1] - y) ** 2)

                if held >= 0 and held in req:
                    goal = drop
                elif held >= 0:
                    empty = [s for s in range(len(slots)) if occ[s] < 0 and s != state["prev_slot"][b, i]]
                    goal = slots[nearest(empty)] if empty else xy[b, i]
                elif open_:
                    s = nearest(open_)
                    open_.remove(s)
                    goal = slots[s]
                else:
                    goal = (drop[0], park if y >= 0 else -park)
                out[b, i] = router.next(x, y, goal[0], goal[1])
        return out


class _Router:
    """Waypoints that keep a robot out of slots other than its goal.

    Horizontal lanes run above, between and below the slot rows; every row
    is bordered by one even-numbered lane, used to drive in, and one
    odd-numbered lane, used to drive out. Lanes are changed only in the gaps
    between slot columns or outside the slot block.
    """

    def __init__(self, config: ScenarioConfig):
        ex = config.extras
        self.h = h = float(ex["slot_half_size"])
        self.xs = sorted(float(v) for v in ex["slot_xs"])
        self.ys = ys = sorted(float(v) for v in ex["slot_ys"])
        gap = (ys[1] - ys[0]) / 2 if len(ys) > 1 else 3 * h
        self.lanes = [ys[0] - gap] + [(a + b) / 2 for a, b in zip(ys, ys[1:])] + [ys[-1] + gap]
        self.left, self.right = self.xs[0] - 2 * h, self.xs[-1] + 2 * h
        self.gaps = [self.left] + [(a + b) / 2 for a, b in zip(self.xs, self.xs[1:])] + [self.right]

    def _among(self, x):
        return self.left < x < self.right

    def _lane(self, y):
        for k, lane in enumerate(self.lanes):
            if abs(y - lane) <= 0.75 * self.h:
                return k
        return None

    def _row(self, y):
        return min(range(len(self.ys)), key=lambda k: abs(y - self.ys[k]))

    @staticmethod
    def _inbound(row):
        return row if row % 2 == 0 else row + 1

    @staticmethod
    def _outbound(row):
        return row + 1 if row % 2 == 0 else row

    def next(self, x, y, gx, gy):
        if abs(gx - x) < 1e-9 and abs(gy - y) < 1e-9:
            return gx, gy
        h = self.h
        here = self._lane(y)
        if self._among(gx) and self.lanes[0] - h < gy < self.lanes[-1] + h:
            L = self._inbound(self._row(gy))
            lane_y = self.lanes[L]
            aligned = abs(x - gx) <= h / 2
            if not self._among(x):
                # get on the lane just outside the block, then drive along it
                return (gx, lane_y) if here == L else (max(x, self.left - 2 * h), lane_y)
            if here == L:
                return (gx, gy) if aligned else (gx, lane_y)
            if here is None:
                row = self._row(y)
                if aligned and abs(row - self._row(gy)) <= 1:
                    return gx, gy
                return x, self.lanes[self._outbound(row)]
            g = min(self.gaps, key=lambda v: abs(v - x))
            return (g, y) if abs(g - x) > h / 4 else (g, lane_y)
        if not self._among(x) or not self.lanes[0] - h < y < self.lanes[-1] + h:
            return gx, gy
        if here is None:
            return x, self.lanes[self._outbound(self._row(y))]
        exit_x = self.left - 2 * h if gx <= x else self.right + 2 * h
        return exit_x, y
