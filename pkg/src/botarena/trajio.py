"""Text trajectory files: one row per robot per environment step.

A file starts with ``#`` header lines of the form ``# key = value`` and
continues with comma-separated rows::

    # format_version = 1
    # scenario = navigation
    # seed = 0
    # N = 3
    # B = 2
    # dt = 0.033000000000000002
    # sub_steps = 10
    # policy = scripted_goal
    # config_hash = 5f1c...
    # config = {"action_noise_scale":0.0,...}
    env_id,step,robot_id,x,y,theta,action,reward,done,metrics
    0,0,0,-0.51234,...,-1,0,0,
    0,1,0,-0.47,...,4,-2.3,0,collisions=0;min_distance=0.61;success=0

Step 0 holds the spawn poses with action ``-1``. ``B`` counts the
environments stored in the file, not how many were stepped together, so
a file does not depend on the batch size used to produce it. Every float
is written with 17 significant digits, which reads back bit for bit.
"""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .framework import ConfigError, ScenarioConfig

TRAJECTORY_FORMAT_VERSION = 1
COLUMNS = ("env_id", "step", "robot_id", "x", "y", "theta", "action", "reward", "done", "metrics")
HEADER_KEYS = ("format_version", "scenario", "seed", "N", "B", "dt", "sub_steps", "policy",
               "config_hash", "config")


class TrajectoryFormatError(ConfigError):
    pass


def num(v) -> str:
    return format(float(v), ".17g")


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(config.canonical_json().encode()).hexdigest()


@dataclass
class TrajectoryRecord:
    header: dict
    env_id: np.ndarray
    step: np.ndarray
    robot_id: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    done: np.ndarray
    metrics: list = field(default_factory=list)   # one dict per row

    def __len__(self) -> int:
        return self.env_id.size

    @property
    def config(self) -> ScenarioConfig:
        return ScenarioConfig.from_dict(json.loads(self.header["config"]))

    @property
    def num_envs(self) -> int:
        return int(self.header["B"])

    @property
    def num_robots(self) -> int:
        return int(self.header["N"])

    def equals(self, other: "TrajectoryRecord") -> bool:
        return self.first_difference(other) is None

    def first_difference(self, other: "TrajectoryRecord"):
        """``None`` when identical, else ``(row, column)``; ``row`` is -1 for a header mismatch."""
        for k in HEADER_KEYS:
            if str(self.header.get(k)) != str(other.header.get(k)):
                return -1, k
        n = min(len(self), len(other))
        for col in COLUMNS[:-1]:
            a, b = getattr(self, col)[:n], getattr(other, col)[:n]
            # compare bit patterns so that -0.0 != 0.0 and nan == nan
            if a.dtype.kind == "f":
                a, b = a.view(np.int64), b.view(np.int64)
            bad = np.flatnonzero(a != b)
            if bad.size:
                return int(bad[0]), col
        for r in range(n):
            if _metrics_text(self.metrics[r]) != _metrics_text(other.metrics[r]):
                return r, "metrics"
        if len(self) != len(other):
            return n, "length"
        return None


def _metrics_text(m: dict) -> str:
    return ";".join(f"{k}={num(v)}" for k, v in sorted(m.items()))


def _parse_metrics(text: str) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(";"):
        k, _, v = item.partition("=")
        out[k] = float(v)
    return out


def from_rollout(config: ScenarioConfig, seed: int, policy: str, rollout, env_ids=None) -> TrajectoryRecord:
    """Flatten a :class:`~botarena.rollout.Rollout` into rows ordered by (env, step, robot)."""
    T1, B, N, _ = rollout.poses.shape
    env_ids = np.arange(B) if env_ids is None else np.asarray(env_ids)
    header = {
        "format_version": TRAJECTORY_FORMAT_VERSION,
        "scenario": config.scenario_name,
        "seed": int(seed),
        "N": N,
        "B": B,
        "dt": num(config.sim.dt),
        "sub_steps": config.sub_steps,
        "policy": policy,
        "config_hash": config_hash(config),
        "config": config.canonical_json(),
    }
    shape = (B, T1, N)
    e = np.broadcast_to(env_ids[:, None, None], shape)
    s = np.broadcast_to(np.arange(T1)[None, :, None], shape)
    r = np.broadcast_to(np.arange(N)[None, None, :], shape)
    poses = rollout.poses.transpose(1, 0, 2, 3)                                  # (B, T+1, N, 3)
    action = np.concatenate([np.full((B, 1, N), -1), rollout.actions.transpose(1, 0, 2)], axis=1)
    reward = np.concatenate([np.zeros((B, 1)), rollout.rewards.T], axis=1)
    done = np.concatenate([np.zeros((B, 1), dtype=bool), rollout.done.T], axis=1)
    names = sorted(rollout.metrics)
    metrics = []
    for b in range(B):
        for t in range(T1):
            m = {} if t == 0 else {k: float(rollout.metrics[k][t - 1, b]) for k in names}
            metrics.extend([m] * N)
    return TrajectoryRecord(
        header,
        e.reshape(-1).astype(np.int64), s.reshape(-1).astype(np.int64), r.reshape(-1).astype(np.int64),
        poses[..., 0].reshape(-1).copy(), poses[..., 1].reshape(-1).copy(), poses[..., 2].reshape(-1).copy(),
        action.reshape(-1).astype(np.int64),
        np.repeat(reward[:, :, None], N, axis=2).reshape(-1),
        np.repeat(done[:, :, None], N, axis=2).reshape(-1).astype(np.int64),
        metrics,
    )


def dumps(rec: TrajectoryRecord) -> str:
    buf = io.StringIO()
    for k in HEADER_KEYS:
        buf.write(f"# {k} = {rec.header[k]}\n")
    buf.write(",".join(COLUMNS) + "\n")
    for i in range(len(rec)):
        buf.write(f"{rec.env_id[i]},{rec.step[i]},{rec.robot_id[i]},{num(rec.x[i])},{num(rec.y[i])},"
                  f"{num(rec.theta[i])},{rec.action[i]},{num(rec.reward[i])},{rec.done[i]},"
                  f"{_metrics_text(rec.metrics[i])}\n")
    return buf.getvalue()


def write(rec: TrajectoryRecord, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(rec))
    return path


def loads(text: str, source: str = "<string>") -> TrajectoryRecord:
    header: dict = {}
    lines = text.splitlines()
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        key, sep, value = lines[k][1:].strip().partition(" = ")
        if not sep:
            raise TrajectoryFormatError(f"{source}:{k + 1}: malformed header line")
        header[key] = value
        k += 1
    missing = [h for h in HEADER_KEYS if h not in header]
    if missing:
        raise TrajectoryFormatError(f"{source}: header is missing {', '.join(missing)}")
    if header["format_version"] != str(TRAJECTORY_FORMAT_VERSION):
        raise TrajectoryFormatError(f"{source}: unsupported trajectory format_version {header['format_version']}")
    for key in ("seed", "N", "B", "sub_steps", "format_version"):
        header[key] = int(header[key])
    if k >= len(lines) or lines[k] != ",".join(COLUMNS):
        raise TrajectoryFormatError(f"{source}:{k + 1}: expected the column line")
    cols: list[list] = [[] for _ in COLUMNS]
    for lineno, line in enumerate(lines[k + 1:], start=k + 2):
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise TrajectoryFormatError(f"{source}:{lineno}: expected {len(COLUMNS)} fields, got {len(parts)}")
        for c, p in zip(cols, parts):
            c.append(p)
    try:
        ints = {name: np.array(cols[i], dtype=np.int64) for i, name in enumerate(COLUMNS)
                if name in ("env_id", "step", "robot_id", "action", "done")}
        floats = {name: np.array([float(v) for v in cols[i]], dtype=np.float64) for i, name in enumerate(COLUMNS)
                  if name in ("x", "y", "theta", "reward")}
        metrics = [_parse_metrics(m) for m in cols[-1]]
    except ValueError as exc:
        raise TrajectoryFormatError(f"{source}: bad number ({exc})") from None
    rec = TrajectoryRecord(header, metrics=metrics, **ints, **floats)
    _check_order(rec, source)
    return rec


def read(path) -> TrajectoryRecord:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TrajectoryFormatError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


def _check_order(rec: TrajectoryRecord, source: str) -> None:
    if not len(rec):
        return
    key = np.stack([rec.env_id, rec.step, rec.robot_id], axis=1)
    diff = np.diff(key, axis=0)
    # strictly increasing in lexicographic (env, step, robot) order
    first_nz = np.where(diff != 0, diff, 0)
    lead = np.take_along_axis(first_nz, np.argmax(diff != 0, axis=1)[:, None], axis=1)[:, 0]
    bad = np.flatnonzero(lead <= 0)
    if bad.size:
        raise TrajectoryFormatError(f"{source}: row {int(bad[0]) + 1} is out of (env_id, step, robot_id) order")


def to_arrays(rec: TrajectoryRecord):
    """Poses ``(B, T+1, N, 3)`` and actions ``(T, B, N)`` for a complete record."""
    B, N = rec.num_envs, rec.num_robots
    if len(rec) % (B * N):
        raise TrajectoryFormatError("row count is not a whole number of environment steps")
    T1 = len(rec) // (B * N)
    poses = np.stack([rec.x, rec.y, rec.theta], axis=-1).reshape(B, T1, N, 3)
    actions = rec.action.reshape(B, T1, N)[:, 1:].transpose(1, 0, 2)
    return poses, actions
