"""Stepping many environments together gives the same bytes as one at a time, only faster.

    python demos/batched_equivalence.py
"""
import time

from botarena import PolicySpec, default_config, trajio
from botarena.rollout import run_episodes


def main() -> None:
    cfg = default_config("predator_prey")
    pol = PolicySpec("prey_chaser")
    texts, times = {}, {}
    for batch in (1, 16):
        t0 = time.perf_counter()
        roll = run_episodes(cfg, pol, seed=5, episodes=16, batch=batch)
        times[batch] = time.perf_counter() - t0
        texts[batch] = trajio.dumps(trajio.from_rollout(cfg, 5, "prey_chaser", roll))
    same = texts[1] == texts[16]
    print(f"16 predator-prey episodes, {cfg.max_steps} steps each")
    print(f"  one at a time : {times[1]:.2f} s")
    print(f"  all together  : {times[16]:.2f} s  ({times[1] / times[16]:.1f}x)")
    print(f"  trajectory files {'byte-identical' if same else 'DIFFER'} ({len(texts[1])} bytes)")


if __name__ == "__main__":
    main()
