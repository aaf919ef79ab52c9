"""Scenario interface, configuration types, heterogeneity and action handling."""
from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import rng
from .barriers import BarrierConfig
from .controllers import ControllerGains
from .geometry import SimParams, projected_points


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DomainError(ValueError):
    """An input outside the domain of an operation (e.g. a bad action index)."""


class DiscreteAction(enum.IntEnum):
    STAY = 0
    UP = 1     # +y
    DOWN = 2   # -y
    LEFT = 3   # -x
    RIGHT = 4  # +x


NUM_ACTIONS = len(DiscreteAction)
ACTION_DIRECTIONS = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]])

CONTROLLERS = ("unicycle_position", "unicycle_pose")
HET_KINDS = ("robot_id", "class_id", "capability_set")
HET_OBS_MODES = ("none", "own", "full_team")


@dataclass(frozen=True)
class HeterogeneitySpec:
    kind: str = "robot_id"
    obs_mode: str = "none"
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in HET_KINDS:
            raise ConfigError(f"unknown heterogeneity kind {self.kind!r}; expected one of {HET_KINDS}")
        if self.obs_mode not in HET_OBS_MODES:
            raise ConfigError(f"unknown heterogeneity obs_mode {self.obs_mode!r}")
        rows = tuple(tuple(float(v) for v in row) for row in self.values)
        object.__setattr__(self, "values", rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise ConfigError("heterogeneity rows must all have the same length")
        arr = self.array
        if not np.all(np.isfinite(arr)):
            raise ConfigError("heterogeneity values must be finite")
        if self.kind == "class_id" and arr.size:
            if not (np.all((arr == 0) | (arr == 1)) and np.all(arr.sum(axis=1) == 1)):
                raise ConfigError("class_id heterogeneity rows must be one-hot")

    @classmethod
    def robot_ids(cls, n: int, obs_mode: str = "none") -> "HeterogeneitySpec":
        return cls("robot_id", obs_mode, tuple(tuple(row) for row in np.eye(n)))

    @property
    def array(self) -> np.ndarray:
        if not self.values:
            return np.zeros((0, 0))
        return np.asarray(self.values, dtype=np.float64)

    @property
    def width(self) -> int:
        return self.array.shape[1] if self.values else 0

    def augment_width(self, n: int) -> int:
        if self.obs_mode == "none":
            return 0
        return self.width * (1 if self.obs_mode == "own" else n)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reset and step one scenario.

    ``rewards`` and ``extras`` are scenario-specific dictionaries whose keys
    are fixed by each scenario's defaults.
    """

    scenario_name: str
    num_robots: int
    max_steps: int
    step_sizes: tuple
    controller: str = "unicycle_position"
    barrier_enabled: bool = True
    heterogeneity: HeterogeneitySpec = field(default_factory=HeterogeneitySpec)
    rewards: Mapping[str, float] = field(default_factory=dict)
    action_noise_scale: float = 0.0
    sub_steps: int = 10
    extras: Mapping[str, Any] = field(default_factory=dict)
    sim: SimParams = field(default_factory=SimParams)
    barrier: BarrierConfig = field(default_factory=BarrierConfig)
    gains: ControllerGains = field(default_factory=ControllerGains)

    def __post_init__(self):
        object.__setattr__(self, "step_sizes", tuple(float(s) for s in self.step_sizes))
        object.__setattr__(self, "rewards", dict(self.rewards))
        object.__setattr__(self, "extras", dict(self.extras))
        if self.num_robots < 1:
            raise ConfigError("num_robots must be >= 1")
        if self.max_steps <= 0:
            raise ConfigError("max_steps must be > 0")
        if self.sub_steps < 1:
            raise ConfigError("sub_steps must be >= 1")
        if len(self.step_sizes) != self.num_robots:
            raise ConfigError(f"step_sizes has {len(self.step_sizes)} entries for {self.num_robots} robots")
        if any(s < 0 for s in self.step_sizes):
            raise ConfigError("step sizes must be non-negative")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        if self.action_noise_scale < 0:
            raise ConfigError("action_noise_scale must be >= 0")
        het = self.heterogeneity
        if het.values and len(het.values) != self.num_robots:
            raise ConfigError(f"heterogeneity has {len(het.values)} rows for {self.num_robots} robots")
        if het.obs_mode != "none" and not het.values:
            raise ConfigError("heterogeneity obs_mode requires values")
        try:
            self.barrier.validate(self.sim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def barrier_config(self) -> BarrierConfig:
        return dataclasses.replace(self.barrier, enabled=self.barrier_enabled)

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioConfig":
        d = dict(d)
        d["heterogeneity"] = HeterogeneitySpec(**d.get("heterogeneity", {}))
        d["sim"] = SimParams(**d.get("sim", {}))
        bar = dict(d.get("barrier", {}))
        bar["static_obstacles"] = tuple(tuple(o) for o in bar.get("static_obstacles", ()))
        d["barrier"] = BarrierConfig(**bar)
        d["gains"] = ControllerGains(**d.get("gains", {}))
        return cls(**d)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def override(self, overrides: Mapping[str, Any]) -> "ScenarioConfig":
        """Apply dotted-key overrides, e.g. ``{"sim.dt": 0.02, "rewards.tag": 5}``.

        Reward and extras keys must already exist; unknown keys are a
        :class:`ConfigError`.
        """
        d = self.to_dict()
        for key, value in overrides.items():
            parts = key.split(".")
            node = d
            for p in parts[:-1]:
                if p not in node or not isinstance(node[p], dict):
                    raise ConfigError(f"unknown configuration key {key!r}")
                node = node[p]
            leaf = parts[-1]
            if leaf not in node:
                raise ConfigError(f"unknown configuration key {key!r}")
            old = node[leaf]
            if isinstance(old, bool) and not isinstance(value, bool):
                raise ConfigError(f"{key} expects a boolean")
            if isinstance(old, (int, float)) and not isinstance(old, bool):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key} expects a number, got {value!r}")
            node[leaf] = value
        try:
            return ScenarioConfig.from_dict(d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --- actions and observations ---------------------------------------------

def action_to_waypoint(position, action: int, step_size: float, noise_scale: float = 0.0,
                       key=None, params: SimParams | None = None) -> np.ndarray:
    """Waypoint ``position + step_size * direction(action)`` plus optional noise.

    ``position`` is the point the controller regulates (the projected point
    for the position controller). Noise is uniform with half-width
    ``noise_scale * step_size`` per axis, drawn from ``key``; the result is
    clipped into the arena.
    """
    params = params or SimParams()
    a = int(action)
    if not 0 <= a < NUM_ACTIONS:
        raise DomainError(f"action index {a} outside [0, {NUM_ACTIONS - 1}]")
    wp = np.asarray(position, dtype=np.float64)[:2] + step_size * ACTION_DIRECTIONS[a]
    if noise_scale > 0:
        if key is None:
            raise DomainError("action noise requires an rng key")
        wp = wp + rng.uniform([key], (2,), -1.0, 1.0)[0] * (noise_scale * step_size)
    return _clip_arena(wp, params)


def _clip_arena(xy, params: SimParams):
    out = np.array(xy, dtype=np.float64, copy=True)
    np.clip(out[..., 0], -params.arena_half_width, params.arena_half_width, out=out[..., 0])
    np.clip(out[..., 1], -params.arena_half_height, params.arena_half_height, out=out[..., 1])
    return out


def waypoints_from_actions(points, actions, step_sizes, noise_scale, keys, params: SimParams):
    """Batched :func:`action_to_waypoint`; shapes ``(B, N, 2)``, ``(B, N)``, ``(B, N)``."""
    wp = points + step_sizes[..., None] * ACTION_DIRECTIONS[actions]
    if noise_scale > 0:
        noise = rng.uniform(keys, actions.shape[1:] + (2,), -1.0, 1.0)
        wp = wp + noise * (noise_scale * step_sizes[..., None])
    return _clip_arena(wp, params)


def check_actions(actions, batch: int, n: int) -> np.ndarray:
    a = np.asarray(actions)
    if a.shape != (batch, n):
        raise DomainError(f"actions must have shape ({batch}, {n}), got {a.shape}")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise DomainError("actions must be integer indices")
    a = a.astype(np.int64)
    bad = np.argwhere((a < 0) | (a >= NUM_ACTIONS))
    if bad.size:
        env, robot = bad[0]
        raise DomainError(f"malformed action {a[env, robot]} for environment {env}, robot {robot}")
    return a


def het_augment(obs, spec: HeterogeneitySpec, robot_index: int) -> np.ndarray:
    """Append the configured heterogeneity representation to one observation."""
    obs = np.asarray(obs, dtype=np.float64)
    if spec.obs_mode == "none":
        return obs
    vals = spec.array
    extra = vals[robot_index] if spec.obs_mode == "own" else vals.ravel()
    return np.concatenate([obs, extra])


def het_augment_batch(obs: np.ndarray, spec: HeterogeneitySpec) -> np.ndarray:
    if spec.obs_mode == "none":
        return obs
    B, N, _ = obs.shape
    vals = spec.array
    if spec.obs_mode == "own":
        extra = np.broadcast_to(vals[None], (B, N, vals.shape[1]))
    else:
        extra = np.broadcast_to(vals.ravel()[None, None], (B, N, vals.size))
    return np.concatenate([obs, extra], axis=-1)


# --- geometry helpers shared by scenarios ----------------------------------

def control_points(poses: np.ndarray, config: ScenarioConfig) -> np.ndarray:
    """The point each robot's controller regulates, shape ``(..., 2)``."""
    poses = np.ascontiguousarray(poses, dtype=np.float64)
    if config.controller == "unicycle_pose":
        return poses[..., :2].copy()
    return projected_points(poses, config.gains.projection_distance)


def in_rect(xy: np.ndarray, rect) -> np.ndarray:
    xmin, xmax, ymin, ymax = rect
    return (xy[..., 0] >= xmin) & (xy[..., 0] <= xmax) & (xy[..., 1] >= ymin) & (xy[..., 1] <= ymax)


def dist_to_rect(xy: np.ndarray, rect) -> np.ndarray:
    xmin, xmax, ymin, ymax = rect
    dx = np.maximum(np.maximum(xmin - xy[..., 0], 0.0), xy[..., 0] - xmax)
    dy = np.maximum(np.maximum(ymin - xy[..., 1], 0.0), xy[..., 1] - ymax)
    return np.sqrt(dx * dx + dy * dy)


def pair_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances between every point of ``a (..., P, 2)`` and ``b (..., Q, 2)``."""
    d = a[..., :, None, :] - b[..., None, :, :]
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])


def seq_sum(x: np.ndarray) -> np.ndarray:
    """Left-to-right sum over the last axis, independent of batch layout."""
    out = np.zeros(x.shape[:-1])
    for k in range(x.shape[-1]):
        out = out + x[..., k]
    return out


# --- scenario interface ------------------------------------------------------

class Scenario:
    """Base class for a batched scenario.

    Scenario state is a ``dict`` of arrays whose leading axis is the batch.
    Every method is a pure function of its arguments, operating on all ``B``
    environments at once; per-environment randomness comes from the
    ``keys`` argument (one counter-based key per environment).
    """

    name: str = ""
    #: metric names that are monotone non-decreasing counters
    counters: tuple = ()

    def default_config(self) -> ScenarioConfig:
        raise NotImplementedError

    def reset(self, keys: np.ndarray, config: ScenarioConfig) -> tuple[np.ndarray, dict]:
        """Return spawn poses ``(B, N, 3)`` and the initial scenario state."""
        raise NotImplementedError

    def step_sizes(self, state: dict, poses: np.ndarray, config: ScenarioConfig) -> np.ndarray:
        B = poses.shape[0]
        return np.broadcast_to(np.asarray(config.step_sizes), (B, config.num_robots)).copy()

    def targets(self, state: dict, poses: np.ndarray, actions: np.ndarray,
                config: ScenarioConfig, keys: np.ndarray) -> np.ndarray:
        """Controller targets ``(B, N, 2)`` for this step; ``keys`` are already step-specific."""
        pts = control_points(poses, config)
        steps = self.step_sizes(state, poses, config)
        return waypoints_from_actions(pts, actions, steps, config.action_noise_scale,
                                      rng.fold(keys, rng.NOISE), config.sim)

    def obstacles(self, state: dict, config: ScenarioConfig, batch: int):
        """Static obstacles ``(B, K, 3)`` and which robot avoids which ``(B, N, K)``."""
        return (np.zeros((batch, 0, 3)), np.zeros((batch, config.num_robots, 0), dtype=bool))

    def transition(self, state: dict, poses: np.ndarray, actions: np.ndarray,
                   config: ScenarioConfig, keys: np.ndarray) -> tuple[dict, np.ndarray, dict]:
        """Apply task rules after motion; returns ``(state, team_reward (B,), metrics)``."""
        raise NotImplementedError

    def observe(self, state: dict, poses: np.ndarray, config: ScenarioConfig) -> np.ndarray:
        """Per-robot observations ``(B, N, D)`` before heterogeneity augmentation."""
        raise NotImplementedError

    def goals(self, state: dict, poses: np.ndarray, config: ScenarioConfig) -> np.ndarray:
        """Where a scripted robot should head next, ``(B, N, 2)``."""
        return control_points(poses, config)

    def metrics(self, state: dict, config: ScenarioConfig) -> dict:
        """Cumulative scenario metrics as ``(B,)`` arrays."""
        return {}


_REGISTRY: dict[str, Callable[[], Scenario]] = {}


def register(cls):
    _REGISTRY[cls.name] = cls
    return cls


def get_scenario(name: str) -> Scenario:
    from . import scenarios  # noqa: F401  (populates the registry)
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(sorted(_REGISTRY))}") from None


def scenario_names() -> list[str]:
    from . import scenarios  # noqa: F401
    return sorted(_REGISTRY)


def default_config(name: str, **overrides) -> ScenarioConfig:
    cfg = get_scenario(name).default_config()
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg
