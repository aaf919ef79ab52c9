"""Wall-clock throughput of batched stepping."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import engine
from .framework import ScenarioConfig, get_scenario
from .policies import PolicySpec, Runner


@dataclass
class BenchRow:
    batch: int
    steps_per_env: int
    aggregate_steps: int
    times: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.times))

    @property
    def std(self) -> float:
        return float(np.std(self.times, ddof=1)) if len(self.times) > 1 else 0.0


def time_batch(config: ScenarioConfig, batch: int, steps_per_env: int, *, seed: int = 0,
               workers: int = 1, policy: PolicySpec | None = None) -> float:
    """Seconds to advance ``batch`` environments by ``steps_per_env`` steps each.

    Episodes that hit the horizon are reset with fresh episode keys inside
    the timed loop; the initial reset and a short warm-up are not timed.
    """
    sc = get_scenario(config.scenario_name)
    runner = Runner(policy or PolicySpec("random"), config, sc)
    warm, _ = engine.reset_from_keys(config, engine.episode_keys(seed, [0]), sc)
    wobs = sc.observe(warm.scenario, warm.poses, config)
    engine.step_batch(warm, runner(warm, wobs), config, scenario=sc)

    next_episode = batch
    state, obs = engine.reset_from_keys(config, engine.episode_keys(seed, range(batch)), sc)
    t0 = time.perf_counter()
    for _ in range(steps_per_env):
        state, out = engine.step_batch(state, runner(state, obs), config, scenario=sc, workers=workers)
        obs = out.obs
        if out.done[0]:
            # every instance shares the same step count, so they finish together
            state, obs = engine.reset_from_keys(
                config, engine.episode_keys(seed, range(next_episode, next_episode + batch)), sc)
            next_episode += batch
    return time.perf_counter() - t0


def bench(config: ScenarioConfig, total_steps: int, batch_sizes, *, trials: int = 5, seed: int = 0,
          workers: int = 1) -> list[BenchRow]:
    """Time ``total_steps`` aggregate environment steps at each batch size.

    When ``total_steps`` is not a multiple of a batch size the per-instance
    step count is rounded up, so slightly more steps than asked are run.
    """
    if total_steps <= 0:
        return []
    rows = []
    for B in batch_sizes:
        per_env = -(-int(total_steps) // int(B))
        times = [time_batch(config, int(B), per_env, seed=seed + t, workers=workers) for t in range(trials)]
        rows.append(BenchRow(int(B), per_env, per_env * int(B), times))
    return rows
