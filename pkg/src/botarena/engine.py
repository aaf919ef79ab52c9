"""Deterministic batched stepping of independent environment instances.

The physics of one environment step (controller, safety filter and Euler
integration for ``sub_steps`` ticks) runs in a single numba kernel that
loops over the batch with the GIL released. Scenario rules are vectorised
numpy over the leading batch axis and use only elementwise arithmetic, so
an instance produces the same bits whether it is stepped alone or inside
a batch. That is what makes batched runs replayable one instance at a time.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba as nb
import numpy as np

from . import rng
from .barriers import DegenerateGeometryError, _filter_unicycle
from .controllers import _pose_control, _position_waypoint
from .framework import ConfigError, Scenario, ScenarioConfig, check_actions, get_scenario, het_augment_batch
from .geometry import _euler_step


@dataclass
class BatchWorldState:
    poses: np.ndarray                 # (B, N, 3)
    scenario: dict                    # arrays with leading axis B
    step: np.ndarray                  # (B,) environment steps taken
    keys: np.ndarray                  # (B,) uint64 per-instance keys
    collisions: np.ndarray            # (B,) steps with a collision
    infeasible: np.ndarray            # (B,) physics ticks with an infeasible QP
    min_distance: np.ndarray          # (B,) smallest centre distance seen so far

    @property
    def batch(self) -> int:
        return self.poses.shape[0]

    def take(self, idx) -> "BatchWorldState":
        idx = np.asarray(idx)
        return BatchWorldState(self.poses[idx], {k: v[idx] for k, v in self.scenario.items()},
                               self.step[idx], self.keys[idx], self.collisions[idx],
                               self.infeasible[idx], self.min_distance[idx])

    @staticmethod
    def concat(states: Sequence["BatchWorldState"]) -> "BatchWorldState":
        if len(states) == 1:
            return states[0]
        cat = np.concatenate
        return BatchWorldState(
            cat([s.poses for s in states]),
            {k: cat([s.scenario[k] for s in states]) for k in states[0].scenario},
            cat([s.step for s in states]), cat([s.keys for s in states]),
            cat([s.collisions for s in states]), cat([s.infeasible for s in states]),
            cat([s.min_distance for s in states]))


@dataclass
class StepOutput:
    obs: np.ndarray                   # (B, N, D)
    team_reward: np.ndarray           # (B,)
    done: np.ndarray                  # (B,) bool
    metrics: dict = field(default_factory=dict)  # name -> (B,) array

    @property
    def rewards(self) -> np.ndarray:
        """Per-robot rewards ``(B, N)``; every robot receives the team reward."""
        return np.repeat(self.team_reward[:, None], self.obs.shape[1], axis=1)

    @staticmethod
    def concat(outs: Sequence["StepOutput"]) -> "StepOutput":
        if len(outs) == 1:
            return outs[0]
        cat = np.concatenate
        return StepOutput(cat([o.obs for o in outs]), cat([o.team_reward for o in outs]),
                          cat([o.done for o in outs]),
                          {k: cat([o.metrics[k] for o in outs]) for k in outs[0].metrics})


# --- physics kernel ----------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _physics(poses, targets, use_pose, sub_steps, dt,
             k_pos, l, si_max, k_rho, k_alpha, k_beta, pos_tol, head_tol, v_max, w_max,
             barrier_on, safety_r, gamma, margin, xmin, xmax, ymin, ymax,
             obstacles, obstacle_mask, qp_tol, qp_iter,
             min_dist, infeasible, error):
    """Advance every instance in place by ``sub_steps`` ticks.

    ``error[b]`` is set to ``1 + i * n + j`` when projected points ``i`` and
    ``j`` of instance ``b`` coincide; that instance stops advancing.
    """
    B = poses.shape[0]
    n = poses.shape[1]
    cmds = np.empty((n, 2))
    goal_th = np.empty(n)
    for b in range(B):
        P = poses[b]
        T = targets[b]
        if use_pose:
            for i in range(n):
                dx = T[i, 0] - P[i, 0]
                dy = T[i, 1] - P[i, 1]
                goal_th[i] = math.atan2(dy, dx) if dx * dx + dy * dy > 1e-12 else P[i, 2]
        best = np.inf
        for _ in range(sub_steps):
            for i in range(n):
                if use_pose:
                    v, w = _pose_control(P[i, 0], P[i, 1], P[i, 2], T[i, 0], T[i, 1], goal_th[i],
                                         k_rho, k_alpha, k_beta, pos_tol, head_tol, v_max, w_max)
                else:
                    v, w = _position_waypoint(P[i, 0], P[i, 1], P[i, 2], T[i, 0], T[i, 1],
                                              k_pos, l, si_max, v_max, w_max)
                cmds[i, 0] = v
                cmds[i, 1] = w
            if barrier_on:
                for i in range(n):
                    pix = P[i, 0] + l * math.cos(P[i, 2])
                    piy = P[i, 1] + l * math.sin(P[i, 2])
                    for j in range(i + 1, n):
                        dx = pix - (P[j, 0] + l * math.cos(P[j, 2]))
                        dy = piy - (P[j, 1] + l * math.sin(P[j, 2]))
                        if dx * dx + dy * dy < 1e-18 and error[b] == 0:
                            error[b] = 1 + i * n + j
                if error[b] != 0:
                    break
                status = _filter_unicycle(P, cmds, l, safety_r, gamma, margin, xmin, xmax, ymin, ymax,
                                          obstacles[b], obstacle_mask[b], v_max, w_max, qp_tol, qp_iter)
                if status == 1:
                    infeasible[b] += 1
            for i in range(n):
                x, y, th = _euler_step(P[i, 0], P[i, 1], P[i, 2], cmds[i, 0], cmds[i, 1], dt)
                P[i, 0] = min(max(x, xmin), xmax)
                P[i, 1] = min(max(y, ymin), ymax)
                P[i, 2] = th
            for i in range(n):
                for j in range(i + 1, n):
                    dx = P[i, 0] - P[j, 0]
                    dy = P[i, 1] - P[j, 1]
                    d = math.sqrt(dx * dx + dy * dy)
                    if d < best:
                        best = d
        min_dist[b] = best


def _run_physics(poses, targets, obstacles, mask, config: ScenarioConfig):
    sim, g, bc = config.sim, config.gains, config.barrier_config
    B = poses.shape[0]
    min_dist = np.full(B, np.inf)
    infeasible = np.zeros(B, dtype=np.int64)
    error = np.zeros(B, dtype=np.int64)
    xmin, xmax, ymin, ymax = sim.bounds
    _physics(poses, np.ascontiguousarray(targets), config.controller == "unicycle_pose",
             config.sub_steps, sim.dt, g.k_position, g.projection_distance, sim.si_max_speed,
             g.k_rho, g.k_alpha, g.k_beta, g.pose_position_tol, g.pose_heading_tol,
             sim.v_max, sim.omega_max, bc.enabled, bc.safety_radius, bc.barrier_gain,
             bc.boundary_margin, xmin, xmax, ymin, ymax,
             np.ascontiguousarray(obstacles, dtype=np.float64), np.ascontiguousarray(mask, dtype=np.bool_),
             bc.qp_tolerance, bc.qp_max_iterations, min_dist, infeasible, error)
    return min_dist, infeasible, error


# --- reset / step ------------------------------------------------------------

def episode_keys(seed: int, episodes: Sequence[int]) -> np.ndarray:
    """Per-episode instance keys derived from one run seed."""
    root = rng.seed_key(seed)
    return rng.fold(np.full(len(episodes), root, dtype=np.uint64), rng.EPISODE,
                    np.asarray(episodes, dtype=np.int64))


def _resolve(config: ScenarioConfig, scenario: Scenario | None) -> Scenario:
    return scenario if scenario is not None else get_scenario(config.scenario_name)


def reset_from_keys(config: ScenarioConfig, keys, scenario: Scenario | None = None):
    """Reset one instance per key; returns ``(state, observations)``."""
    keys = np.array(keys, dtype=np.uint64, ndmin=1)
    if keys.size == 0:
        raise ConfigError("reset needs at least one seed")
    sc = _resolve(config, scenario)
    poses, sstate = sc.reset(keys, config)
    B = keys.size
    state = BatchWorldState(np.ascontiguousarray(poses, dtype=np.float64), sstate,
                            np.zeros(B, dtype=np.int64), keys, np.zeros(B, dtype=np.int64),
                            np.zeros(B, dtype=np.int64), np.full(B, np.inf))
    return state, het_augment_batch(sc.observe(sstate, state.poses, config), config.heterogeneity)


def reset_batch(config: ScenarioConfig, seeds: Sequence[int], scenario: Scenario | None = None):
    """Reset ``len(seeds)`` instances, instance ``i`` from ``seeds[i]``."""
    if len(seeds) == 0:
        raise ConfigError("reset_batch needs at least one seed")
    return reset_from_keys(config, np.array([rng.seed_key(int(s)) for s in seeds], dtype=np.uint64), scenario)


def _step_chunk(state: BatchWorldState, actions: np.ndarray, config: ScenarioConfig, sc: Scenario,
                offset: int = 0):
    B = state.batch
    step_keys = rng.fold(state.keys, rng.SCENARIO, state.step)
    targets = sc.targets(state.scenario, state.poses, actions, config, step_keys)
    obstacles, mask = sc.obstacles(state.scenario, config, B)
    poses = state.poses.copy()
    min_dist, infeasible, error = _run_physics(poses, targets, obstacles, mask, config)
    bad = np.flatnonzero(error)
    if bad.size:
        b = int(bad[0])
        i, j = divmod(int(error[b]) - 1, config.num_robots)
        raise DegenerateGeometryError(f"environment {b + offset}: robots {i} and {j} have coincident control points")
    collided = min_dist < config.sim.collision_radius
    sstate, reward, metrics = sc.transition(state.scenario, poses, actions, config, step_keys)
    coef = config.rewards.get("violation", 0.0)
    if coef:
        reward = reward + coef * collided
    new = BatchWorldState(poses, sstate, state.step + 1, state.keys,
                          state.collisions + collided, state.infeasible + infeasible,
                          np.minimum(state.min_distance, min_dist))
    done = new.step >= config.max_steps
    obs = het_augment_batch(sc.observe(sstate, poses, config), config.heterogeneity)
    metrics = dict(metrics)
    metrics["collisions"] = new.collisions
    metrics["qp_infeasible"] = new.infeasible
    metrics["min_distance"] = min_dist
    return new, StepOutput(obs, np.asarray(reward, dtype=np.float64), done, metrics)


def step_batch(state: BatchWorldState, actions, config: ScenarioConfig, *,
               scenario: Scenario | None = None, workers: int = 1,
               chunk_size: int | None = None) -> tuple[BatchWorldState, StepOutput]:
    """Advance every instance by one environment step.

    The batch can be split into chunks of ``chunk_size`` instances and
    spread over ``workers`` threads; results are gathered in instance order
    and do not depend on either setting.
    """
    sc = _resolve(config, scenario)
    actions = check_actions(actions, state.batch, config.num_robots)
    B = state.batch
    if chunk_size is None:
        chunk_size = B if workers <= 1 else -(-B // workers)
    if chunk_size >= B:
        return _step_chunk(state, actions, config, sc)
    bounds = [(lo, min(lo + chunk_size, B)) for lo in range(0, B, chunk_size)]
    job = lambda lo_hi: _step_chunk(state.take(np.arange(*lo_hi)), actions[lo_hi[0]:lo_hi[1]], config, sc,
                                     lo_hi[0])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, bounds))
    else:
        results = [job(lh) for lh in bounds]
    return (BatchWorldState.concat([r[0] for r in results]),
            StepOutput.concat([r[1] for r in results]))


def scenario_step(state: BatchWorldState, actions, config: ScenarioConfig):
    """Step a single-instance state (``B == 1``) with ``(N,)`` actions."""
    if state.batch != 1:
        raise ConfigError("scenario_step expects a single-instance state")
    return step_batch(state, np.asarray(actions)[None], config)
