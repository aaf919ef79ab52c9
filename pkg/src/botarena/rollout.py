"""Run whole episodes in batches and collect what happened."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine
from .framework import ScenarioConfig, get_scenario
from .policies import PolicySpec, Runner


@dataclass
class Rollout:
    """Per-step records for a batch of episodes (``T`` steps, ``B`` episodes)."""

    keys: np.ndarray                 # (B,)
    poses: np.ndarray                # (T + 1, B, N, 3), index 0 is the spawn
    actions: np.ndarray              # (T, B, N)
    rewards: np.ndarray              # (T, B)
    done: np.ndarray                 # (T, B)
    metrics: dict = field(default_factory=dict)   # name -> (T, B)
    scenario_states: list = field(default_factory=list)  # optional, one dict per step

    @property
    def returns(self) -> np.ndarray:
        return self.rewards.sum(axis=0)

    def final(self, name: str) -> np.ndarray:
        return self.metrics[name][-1]

    @staticmethod
    def concat(parts: Sequence["Rollout"]) -> "Rollout":
        if len(parts) == 1:
            return parts[0]
        cat = np.concatenate
        return Rollout(cat([p.keys for p in parts]), cat([p.poses for p in parts], axis=1),
                       cat([p.actions for p in parts], axis=1), cat([p.rewards for p in parts], axis=1),
                       cat([p.done for p in parts], axis=1),
                       {k: cat([p.metrics[k] for p in parts], axis=1) for k in parts[0].metrics})


def run_batch(config: ScenarioConfig, policies, keys, *, steps: int | None = None,
              workers: int = 1, chunk_size: int | None = None, actions=None,
              keep_states: bool = False) -> Rollout:
    """Roll out one episode per key, all in one batch.

    ``actions (T, B, N)``, when given, replaces the policies (used to replay
    a recorded trajectory).
    """
    sc = get_scenario(config.scenario_name)
    keys = np.array(keys, dtype=np.uint64, ndmin=1)
    T = config.max_steps if steps is None else int(steps)
    policy = None
    if actions is None:
        policy = Runner(policies if policies is not None else PolicySpec(), config, sc)
    state, obs = engine.reset_from_keys(config, keys, sc)
    B, N = state.poses.shape[:2]
    poses = np.empty((T + 1, B, N, 3))
    poses[0] = state.poses
    acts = np.empty((T, B, N), dtype=np.int64)
    rewards = np.empty((T, B))
    done = np.empty((T, B), dtype=bool)
    metrics: dict = {}
    states = []
    for t in range(T):
        a = policy(state, obs) if actions is None else np.asarray(actions[t])
        state, out = engine.step_batch(state, a, config, scenario=sc, workers=workers, chunk_size=chunk_size)
        obs = out.obs
        poses[t + 1] = state.poses
        acts[t] = a
        rewards[t] = out.team_reward
        done[t] = out.done
        for k, v in out.metrics.items():
            metrics.setdefault(k, np.empty((T, B)))[t] = v
        if keep_states:
            states.append({k: v.copy() for k, v in state.scenario.items()})
    return Rollout(keys, poses, acts, rewards, done, metrics, states)


def run_episodes(config: ScenarioConfig, policies, seed: int, episodes: int, batch: int, **kw) -> Rollout:
    """``episodes`` episodes from one run seed, executed ``batch`` at a time.

    Episode ``e`` always gets the same key, so results do not depend on
    ``batch``.
    """
    keys = engine.episode_keys(seed, range(episodes))
    parts = [run_batch(config, policies, keys[lo:lo + batch], **kw) for lo in range(0, episodes, batch)]
    return Rollout.concat(parts)
