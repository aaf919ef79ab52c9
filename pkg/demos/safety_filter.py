"""Robots sent straight through each other, with and without the barrier filter.

    python demos/safety_filter.py [episodes]
"""
import sys

import numpy as np

from botarena import PolicySpec, default_config
from botarena.rollout import run_episodes


def closest_approach(roll) -> float:
    xy = roll.poses[..., :2]
    d = np.sqrt(((xy[:, :, :, None] - xy[:, :, None, :]) ** 2).sum(-1))
    n = xy.shape[2]
    iu = np.triu_indices(n, 1)
    return float(d[..., iu[0], iu[1]].min())


def main(episodes: int = 10) -> None:
    base = default_config("random_waypoints").override({"extras.mode": "crossing", "max_steps": 500})
    print(f"{episodes} episodes x 500 steps, 4 robots, every new waypoint mirrored through the centre")
    print(f"safety radius {base.barrier.safety_radius} m, collision radius {base.sim.collision_radius} m\n")
    for on in (True, False):
        cfg = base if on else base.override({"barrier_enabled": False})
        roll = run_episodes(cfg, PolicySpec("random"), seed=1, episodes=episodes, batch=episodes)
        print(f"barriers {'on ' if on else 'off'}: closest approach {closest_approach(roll):.3f} m, "
              f"collision ticks per episode {roll.final('collisions').mean():.1f}, "
              f"waypoints reached per episode {roll.final('waypoints_reached').mean():.1f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
