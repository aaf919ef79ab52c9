"""``botarena`` command line: run, bench, render, verify, list-scenarios.

Exit status is 0 on success, 1 when ``verify`` finds a mismatch and 2 for
bad input (unknown scenario, malformed config, unreadable file).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine, trajio
from .benchmark import bench
from .framework import ConfigError, ScenarioConfig, default_config, get_scenario, scenario_names
from .policies import PolicySpec
from .render import render_frames
from .rollout import Rollout, run_batch, run_episodes

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

RUN_CONFIG_FORMAT_VERSION = 1
OUT_ENV = "BOTARENA_OUT"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "botarena_runs"))


@dataclass
class RunConfig:
    """One ``botarena run`` invocation after merging the config file and flags."""

    scenario: str = "navigation"
    seed: int = 0
    batch: int = 1
    episodes: int = 1
    policy: str = "random"           # one spec, or one per robot separated by commas
    out: str | None = None
    render: bool = False
    noise_scale: float | None = None
    barriers: bool = True
    workers: int = 1
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")

    def scenario_config(self) -> ScenarioConfig:
        cfg = default_config(self.scenario)
        over = dict(self.overrides)
        if self.noise_scale is not None:
            over["action_noise_scale"] = float(self.noise_scale)
        if not self.barriers:
            over["barrier_enabled"] = False
        return cfg.override(over) if over else cfg

    def policies(self, n: int) -> list[PolicySpec]:
        parts = [p.strip() for p in self.policy.split(",")]
        if len(parts) == 1:
            parts = parts * n
        if len(parts) != n:
            raise ConfigError(f"{len(parts)} policies given for {n} robots")
        return [PolicySpec.parse(p) for p in parts]

    def out_path(self) -> Path:
        if self.out:
            return Path(self.out)
        return default_out_dir() / f"{self.scenario}_seed{self.seed}.csv"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_run_config(path) -> dict:
    """Read a TOML run file into ``RunConfig`` keyword arguments."""
    try:
        data = tomllib.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.pop("format_version", None) != RUN_CONFIG_FORMAT_VERSION:
        raise ConfigError(f"{path}: format_version must be {RUN_CONFIG_FORMAT_VERSION}")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(sorted(unknown))}")
    if isinstance(data.get("policy"), list):
        data["policy"] = ",".join(data["policy"])
    data["overrides"] = _flatten(data.get("overrides", {}))
    return data


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_run_config(args) -> RunConfig:
    kw = load_run_config(args.config) if args.config else {}
    for name in ("scenario", "seed", "batch", "episodes", "policy", "out", "workers", "noise_scale"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    if args.render:
        kw["render"] = True
    if args.no_barriers:
        kw["barriers"] = False
    over = kw.setdefault("overrides", {})
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        over[key] = _parse_value(value)
    return RunConfig(**kw)


def summarize(rollout) -> dict:
    """Mean and standard error across episodes of the return and every final metric."""
    values = {"return": rollout.returns}
    for k in sorted(rollout.metrics):
        values[k] = rollout.final(k)
    out = {}
    for k, v in values.items():
        v = np.asarray(v, dtype=np.float64)
        se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out[k] = (float(np.mean(v)), se)
    return out


def execute(run: RunConfig):
    """Run the episodes of ``run``; returns ``(config, rollout, record)``."""
    cfg = run.scenario_config()
    pols = run.policies(cfg.num_robots)
    roll = run_episodes(cfg, pols, run.seed, run.episodes, run.batch, workers=run.workers)
    rec = trajio.from_rollout(cfg, run.seed, run.policy, roll)
    return cfg, roll, rec


def replay(rec: trajio.TrajectoryRecord, *, batch: int = 1, use_policy: bool = True, keep_states=False):
    """Re-simulate every environment of a record ``batch`` at a time.

    With ``use_policy`` the header's policy picks the actions again;
    otherwise the recorded actions are fed back in.
    """
    cfg = rec.config
    seed = int(rec.header["seed"])
    _, actions = trajio.to_arrays(rec)
    env_ids = np.unique(rec.env_id)
    keys = engine.episode_keys(seed, env_ids)
    pols = None
    if use_policy:
        pols = RunConfig(scenario=cfg.scenario_name, policy=rec.header["policy"]).policies(cfg.num_robots)
    parts = []
    for lo in range(0, env_ids.size, batch):
        sl = slice(lo, lo + batch)
        parts.append(run_batch(cfg, pols, keys[sl], steps=actions.shape[0], keep_states=keep_states,
                               actions=None if use_policy else actions[:, sl]))
    # scenario states are only kept for the first chunk; rendering replays one env anyway
    return cfg, Rollout.concat(parts)


def _policy_replayable(policy: str) -> bool:
    for p in policy.split(","):
        spec = PolicySpec.parse(p.strip())
        if spec.kind == "feedforward_file" and not Path(spec.path).exists():
            return False
    return True


def safety_report(rec: trajio.TrajectoryRecord) -> list[str]:
    """Problems found by recomputing distances from the recorded poses."""
    cfg = rec.config
    poses, _ = trajio.to_arrays(rec)
    B, T1, N, _ = poses.shape
    problems = []
    if N < 2:
        return problems
    xy = poses[..., :2]
    d = np.sqrt(((xy[:, :, :, None] - xy[:, :, None, :]) ** 2).sum(-1))
    iu = np.triu_indices(N, 1)
    dmin = d[:, :, iu[0], iu[1]].min(-1)                                   # (B, T+1)
    coll = np.array([[rec.metrics[(b * T1 + t) * N].get("collisions", 0.0) for t in range(1, T1)]
                     for b in range(B)]).reshape(B, T1 - 1)
    for b in range(B):
        # pose samples are a subset of the physics ticks the counter saw
        seen = np.cumsum(dmin[b, 1:] < cfg.sim.collision_radius)
        if np.any(seen > coll[b]):
            t = int(np.argmax(seen > coll[b])) + 1
            problems.append(f"env {b}: collision at step {t} missing from the collisions metric")
        if np.any(np.diff(coll[b]) < 0):
            problems.append(f"env {b}: collisions metric decreases")
        if cfg.barrier_enabled:
            bad = np.flatnonzero(dmin[b] < cfg.barrier.safety_radius - 1e-3)
            if bad.size:
                problems.append(f"env {b}: robots {dmin[b, bad[0]]:.6f} m apart at step {bad[0]}, "
                                f"below the safety radius {cfg.barrier.safety_radius}")
    return problems


def verify(rec: trajio.TrajectoryRecord, *, batch: int = 1) -> tuple[bool, list[str]]:
    lines = []
    cfg = rec.config
    if trajio.config_hash(cfg) != rec.header["config_hash"]:
        return False, ["config_hash does not match the embedded config"]
    use_policy = _policy_replayable(rec.header["policy"])
    if not use_policy:
        lines.append("policy weights not found; replaying the recorded actions")
    _, roll = replay(rec, batch=batch, use_policy=use_policy)
    again = trajio.from_rollout(cfg, int(rec.header["seed"]), rec.header["policy"], roll,
                                env_ids=np.unique(rec.env_id))
    diff = rec.first_difference(again)
    if diff is not None:
        row, col = diff
        if row < 0:
            lines.append(f"header field {col} differs from the replay")
        elif col == "length":
            lines.append(f"row count differs: file has {len(rec)}, replay has {len(again)}")
        else:
            where = f"env {rec.env_id[row]}, step {rec.step[row]}, robot {rec.robot_id[row]}"
            got = rec.metrics[row] if col == "metrics" else getattr(rec, col)[row]
            want = again.metrics[row] if col == "metrics" else getattr(again, col)[row]
            if col != "metrics":
                got, want = trajio.num(got), trajio.num(want)
            lines.append(f"first divergent data row {row + 1} ({where}), column {col}: file {got}, replay {want}")
        return False, lines
    lines.append(f"replay matches all {len(rec)} rows")
    problems = safety_report(rec)
    lines += problems
    if not problems:
        lines.append("collision counts and safety distances check out")
    return not problems, lines


# --- subcommands -----------------------------------------------------------------

def cmd_run(args) -> int:
    run = build_run_config(args)
    cfg, roll, rec = execute(run)
    path = trajio.write(rec, run.out_path())
    print(f"{run.scenario}: {run.episodes} episode(s), seed {run.seed}, trajectory -> {path}")
    for k, (mean, se) in summarize(roll).items():
        print(f"  {k:>20}: {mean:.4g} ± {se:.2g}")
    if run.render:
        _, r0 = replay(rec, batch=1, keep_states=True, use_policy=_policy_replayable(rec.header["policy"]))
        frames_dir = path.with_name(path.stem + "_frames")
        _render_env0(cfg, r0, frames_dir, fps=10.0, gif=True)
        print(f"  frames -> {frames_dir}")
    return 0


def _render_env0(cfg, roll, out_dir, *, fps, gif):
    states = [{k: v[0] for k, v in st.items()} for st in roll.scenario_states]
    return render_frames(cfg, roll.poses[:, 0], states, out_dir, fps=fps, gif=gif)


def cmd_render(args) -> int:
    rec = trajio.read(args.trajectory)
    sel = rec.env_id == rec.env_id[0]
    one = trajio.TrajectoryRecord(dict(rec.header, B=1), *(getattr(rec, c)[sel] for c in trajio.COLUMNS[:-1]),
                                  metrics=[m for m, s in zip(rec.metrics, sel) if s])
    cfg, roll = replay(one, batch=1, use_policy=False, keep_states=True)
    poses, _ = trajio.to_arrays(one)
    if not np.array_equal(roll.poses[:, 0], poses[0]):
        print("warning: replayed poses differ from the file; drawing the file's poses", file=sys.stderr)
        roll.poses[:, 0] = poses[0]
    out = Path(args.out) if args.out else default_out_dir() / (Path(args.trajectory).stem + "_frames")
    paths = _render_env0(cfg, roll, out, fps=args.fps, gif=not args.no_gif)
    print(f"{len(paths)} frames -> {out}")
    return 0


def cmd_verify(args) -> int:
    rec = trajio.read(args.trajectory)
    ok, lines = verify(rec, batch=args.batch)
    for line in lines:
        print(line)
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    cfg = default_config(args.scenario)
    if args.no_barriers:
        cfg = cfg.override({"barrier_enabled": False})
    sizes = [int(s) for s in args.batch_sizes.split(",") if s]
    rows = bench(cfg, args.total_steps, sizes, trials=args.trials, seed=args.seed, workers=args.workers)
    if not rows:
        print("no steps requested")
        return 0
    base = rows[0].mean
    print(f"{'batch':>6} {'steps/env':>10} {'mean s':>10} {'std s':>9} {'speedup':>8}")
    for r in rows:
        print(f"{r.batch:>6} {r.steps_per_env:>10} {r.mean:>10.3f} {r.std:>9.3f} {base / r.mean:>8.1f}")
    return 0


def cmd_list(args) -> int:
    for name in scenario_names():
        cfg = get_scenario(name).default_config()
        print(f"{name:<20} robots={cfg.num_robots} max_steps={cfg.max_steps} rewards={','.join(sorted(cfg.rewards))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="botarena", description="Batched multi-robot scenario simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run episodes and write a trajectory file")
    r.add_argument("--config", help="TOML run file; flags override its values")
    r.add_argument("--scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--batch", type=int, help="environments stepped together")
    r.add_argument("--episodes", type=int)
    r.add_argument("--policy", help="random | scripted_goal | prey_chaser | feedforward_file:PATH[:sample]; "
                                    "comma-separated for one per robot")
    r.add_argument("--out", help=f"trajectory path (default under ${OUT_ENV} or ./botarena_runs)")
    r.add_argument("--render", action="store_true", help="also draw frames of environment 0")
    r.add_argument("--noise-scale", type=float, dest="noise_scale")
    r.add_argument("--no-barriers", action="store_true")
    r.add_argument("--workers", type=int)
    r.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="scenario config override, e.g. max_steps=50 or rewards.tag=5")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="time batched stepping at several batch sizes")
    b.add_argument("--scenario", default="random_waypoints")
    b.add_argument("--total-steps", type=int, default=100_000)
    b.add_argument("--batch-sizes", default="1,4,16,64")
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-barriers", action="store_true")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("render", help="draw frames of environment 0 of a trajectory")
    d.add_argument("trajectory")
    d.add_argument("--out", help="frame directory")
    d.add_argument("--fps", type=float, default=10.0)
    d.add_argument("--no-gif", action="store_true")
    d.set_defaults(func=cmd_render)

    v = sub.add_parser("verify", help="replay a trajectory and compare row by row")
    v.add_argument("trajectory")
    v.add_argument("--batch", type=int, default=1, help="environments replayed together")
    v.set_defaults(func=cmd_verify)

    ls = sub.add_parser("list-scenarios", help="list scenario names")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:  # ConfigError is a ValueError
        print(f"botarena: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
