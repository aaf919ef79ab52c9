"""What the hand-written policies manage per scenario, plus a GIF of one episode.

    python demos/scripted_policies.py [out_dir]
"""
import sys
from pathlib import Path

from botarena import PolicySpec, default_config, scenario_names
from botarena.cli import replay
from botarena.render import render_frames
from botarena.rollout import run_episodes
from botarena import trajio

HEADLINE = {
    "navigation": "success",
    "predator_prey": "tags",
    "warehouse": "deliveries",
    "rware": "shelf_dropoffs",
    "foraging": "resources_foraged",
    "discovery": "landmarks_tagged",
    "material_transport": "delivered",
    "arctic_transport": "success",
    "random_waypoints": "waypoints_reached",
}


def main(out_dir: str = "demo_frames") -> None:
    print(f"{'scenario':<20} {'policy':<14} {'return':>8}  headline metric")
    for name in scenario_names():
        cfg = default_config(name)
        pol = "prey_chaser" if name == "predator_prey" else "scripted_goal"
        roll = run_episodes(cfg, PolicySpec(pol), seed=0, episodes=16, batch=16)
        key = HEADLINE.get(name)
        metric = f"{key} {roll.final(key).mean():.2f}" if key in roll.metrics else ""
        print(f"{name:<20} {pol:<14} {roll.returns.mean():>8.2f}  {metric}")

    cfg = default_config("predator_prey")
    roll = run_episodes(cfg, PolicySpec("prey_chaser"), seed=0, episodes=1, batch=1)
    rec = trajio.from_rollout(cfg, 0, "prey_chaser", roll)
    _, again = replay(rec, keep_states=True)
    states = [{k: v[0] for k, v in st.items()} for st in again.scenario_states]
    paths = render_frames(cfg, again.poses[:, 0], states, Path(out_dir))
    print(f"\n{len(paths)} predator-prey frames and episode.gif -> {out_dir}/")


if __name__ == "__main__":
    main(*sys.argv[1:2])
