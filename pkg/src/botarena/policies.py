"""Decision rules for running episodes without a training stack.

Policies map observations (and, for the scripted kinds, the goals a
scenario exposes) to discrete actions. Randomness comes from per-step
counter keys, so a policy's choices are reproducible and independent of
how environments are batched.

Feedforward weights live in a TOML file::

    format_version = 1

    [[layers]]
    activation = "relu"        # relu | tanh | identity
    weights = [[...], ...]     # out_dim rows of in_dim numbers
    bias = [...]               # out_dim numbers

The last layer must have 5 outputs, one logit per action.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import mathops, rng
from .framework import ACTION_DIRECTIONS, NUM_ACTIONS, ConfigError, ScenarioConfig, control_points, seq_sum

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

WEIGHTS_FORMAT_VERSION = 1
POLICY_KINDS = ("random", "scripted_goal", "prey_chaser", "feedforward_file")
ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": mathops.tanh,
    "identity": lambda x: x,
}


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray   # (out, in)
    bias: np.ndarray      # (out,)
    activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "weights", np.ascontiguousarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "bias", np.ascontiguousarray(self.bias, dtype=np.float64))


@dataclass(frozen=True)
class FeedforwardWeights:
    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("a feedforward policy needs at least one layer")
        for k, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ConfigError(f"layer {k}: unknown activation {layer.activation!r}")
            if layer.weights.ndim != 2 or layer.bias.shape != (layer.weights.shape[0],):
                raise ConfigError(f"layer {k}: weights must be (out, in) with a matching bias")
            if k and layer.weights.shape[1] != self.layers[k - 1].weights.shape[0]:
                raise ConfigError(f"layer {k} expects {layer.weights.shape[1]} inputs but layer {k - 1} "
                                  f"produces {self.layers[k - 1].weights.shape[0]}")
        if self.output_dim != NUM_ACTIONS:
            raise ConfigError(f"final layer must produce {NUM_ACTIONS} logits, got {self.output_dim}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    def logits(self, obs: np.ndarray) -> np.ndarray:
        """Forward pass over the last axis of ``obs``."""
        x = np.asarray(obs, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ConfigError(f"observation has {x.shape[-1]} entries, policy expects {self.input_dim}")
        lead = x.shape[:-1]
        x = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        for layer in self.layers:
            x = ACTIVATIONS[layer.activation](mathops.dense(x, layer.weights, layer.bias))
        return x.reshape(lead + (self.output_dim,))


def load_weights(path) -> FeedforwardWeights:
    data = tomllib.loads(Path(path).read_text())
    if data.get("format_version") != WEIGHTS_FORMAT_VERSION:
        raise ConfigError(f"{path}: unsupported weights format_version {data.get('format_version')!r}")
    try:
        layers = tuple(Layer(np.ascontiguousarray(l["weights"], dtype=np.float64),
                             np.ascontiguousarray(l["bias"], dtype=np.float64), l.get("activation", "identity"))
                       for l in data["layers"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed layer ({exc})") from None
    return FeedforwardWeights(layers)


def save_weights(weights: FeedforwardWeights, path) -> None:
    def num(v):
        return format(float(v), ".17g")

    lines = [f"format_version = {WEIGHTS_FORMAT_VERSION}", ""]
    for layer in weights.layers:
        rows = ",\n  ".join("[" + ", ".join(num(v) for v in row) + "]" for row in layer.weights)
        lines += ["[[layers]]", f'activation = "{layer.activation}"',
                  f"weights = [\n  {rows},\n]", "bias = [" + ", ".join(num(v) for v in layer.bias) + "]", ""]
    Path(path).write_text("\n".join(lines))


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "random"
    path: str | None = None
    greedy: bool = True
    temperature: float = 1.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind == "feedforward_file" and not self.path:
            raise ConfigError("feedforward_file policies need a weights path")
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")

    @classmethod
    def parse(cls, text: str) -> "PolicySpec":
        """``kind`` or ``feedforward_file:PATH[:sample]``."""
        if text.startswith("feedforward_file:"):
            rest = text[len("feedforward_file:"):]
            greedy = True
            if rest.endswith(":sample"):
                rest, greedy = rest[: -len(":sample")], False
            return cls("feedforward_file", rest, greedy)
        return cls(text)


# --- single-observation API ---------------------------------------------------

def best_move(position, goal, step: float) -> int:
    """Action whose displacement of ``step`` lands closest to ``goal``; ties go to the lowest index."""
    cand = np.asarray(position, dtype=np.float64)[None] + step * ACTION_DIRECTIONS
    d = np.sqrt(((cand - np.asarray(goal, dtype=np.float64)) ** 2).sum(axis=-1))
    return int(np.argmin(d))


def _sample_logits(logits: np.ndarray, u: np.ndarray, temperature: float) -> np.ndarray:
    z = logits / temperature
    z = z - z.max(axis=-1, keepdims=True)
    p = mathops.exp(z)
    cdf = np.cumsum(p, axis=-1) / p.sum(axis=-1, keepdims=True)
    return np.minimum((cdf < u[..., None]).sum(axis=-1), NUM_ACTIONS - 1)


def act(policy: PolicySpec, obs, key, *, goal=None, position=None, step: float = 0.2,
        weights: FeedforwardWeights | None = None) -> int:
    """One robot's action. Scripted kinds need ``position`` and ``goal``."""
    if policy.kind == "random":
        return int(rng.integers([key], NUM_ACTIONS)[0])
    if policy.kind in ("scripted_goal", "prey_chaser"):
        if goal is None or position is None:
            raise ConfigError(f"{policy.kind} needs the robot position and its goal")
        return best_move(position, goal, step)
    weights = weights or load_weights(policy.path)
    logits = weights.logits(obs)
    if policy.greedy:
        return int(np.argmax(logits))
    return int(_sample_logits(logits, rng.uniform([key], ())[0:1], policy.temperature)[0])


# --- batched API ----------------------------------------------------------------

def reachable_step(config: ScenarioConfig) -> float:
    """How far a control point can actually travel in one environment step."""
    return config.sim.si_max_speed * config.sim.dt * config.sub_steps


def encircle_goals(prey: np.ndarray, robots: np.ndarray, radius: float,
                   spread: float = 1.5) -> np.ndarray:
    """Pincer targets around the prey.

    Slots sit ``radius`` from the prey on the team's side, ``spread``
    radians apart and centred on the bearing of the team's centroid, so the
    flanks cut off sideways escapes while the middle pushes in. Robots take
    slots in angular order.
    """
    B, N, _ = robots.shape
    rel = robots - prey[:, None, :]
    ang = mathops.atan2(rel[..., 1], rel[..., 0])
    base = mathops.atan2(seq_sum(rel[..., 1]) / N, seq_sum(rel[..., 0]) / N)
    order = np.argsort(np.mod(ang - base[:, None] + math.pi, 2 * math.pi), axis=1, kind="stable")
    slots = base[:, None] + (np.arange(N) - (N - 1) / 2) * spread
    targets = np.empty_like(robots)
    rows = np.arange(B)[:, None]
    spot = np.stack([mathops.cos(slots), mathops.sin(slots)], axis=-1) * radius + prey[:, None, :]
    targets[rows, order] = spot
    return targets


def detour_goals(points: np.ndarray, goals: np.ndarray, bounds, clearance: float = 0.3,
                 offsets: tuple = (0.4, 0.7), wall_inset: float = 0.15,
                 goal_clearance: float = 0.2, ahead: float = 0.1, settle_radius: float = 0.1,
                 orbit_lead: float = math.pi / 4, orbit_gain: float = 0.05) -> np.ndarray:
    """Replace goals whose straight path is blocked by another robot.

    If robot ``j`` lies within ``clearance`` of the segment from robot ``i``
    to its goal (and ``j`` is at least ``goal_clearance`` from that goal, so
    it is not sitting on it), robot ``i`` heads for a point beside ``j``
    instead, off the line from ``j`` to the goal. Candidates are tried in
    order: the side ``i`` is already on, then the other side, for each
    distance in ``offsets``; the first one clear of every other robot wins.
    Points are clipped to ``wall_inset`` inside the walls.

    When even the way to that point passes within ``clearance`` of ``j``,
    the target becomes a point ``orbit_lead`` radians further round ``j``,
    so ``i`` circles ``j`` instead of pressing against it.
    """
    B, N, _ = points.shape
    out = goals.copy()
    if N == 1:
        return out
    xmin, xmax, ymin, ymax = bounds
    rows = np.arange(B)
    blocks = np.zeros((B, N, N), dtype=bool)
    alongs = np.zeros((B, N, N))
    for i in range(N):
        p, g = points[:, i], goals[:, i]
        seg = g - p
        L = np.sqrt((seg * seg).sum(-1))
        u = seg / np.where(L > 0, L, 1.0)[:, None]
        n = np.stack([-u[:, 1], u[:, 0]], axis=-1)                     # left normal
        rel = points - p[:, None]
        along = (rel * u[:, None]).sum(-1)
        across = (rel * n[:, None]).sum(-1)
        dg = goals[:, i:i + 1] - points
        goal_clear = np.sqrt((dg * dg).sum(-1)) >= goal_clearance
        # a robot squatting on my goal while its own goal is elsewhere: the
        # higher-index robot of the pair walks around, the other waits
        dj = points - goals
        settled = np.sqrt((dj * dj).sum(-1)) < settle_radius
        goal_clear |= ~settled & (np.arange(N) < i)
        # once level with j on the way to the goal, j no longer blocks
        behind = ((p[:, None] - points) * (g[:, None] - points)).sum(-1) < 0
        blocks[:, i] = ((along > 0) & (along < L[:, None]) & (np.abs(across) < clearance)
                         & goal_clear & behind)
        blocks[:, i, i] = False
        alongs[:, i] = along
    # two robots in each other's way: only the higher index steps aside
    mutual = blocks & blocks.transpose(0, 2, 1)
    blocks &= ~(mutual & (np.arange(N)[:, None] < np.arange(N)[None, :]))
    for i in range(N):
        p, g = points[:, i], goals[:, i]
        block, along = blocks[:, i], alongs[:, i]
        if not block.any():
            continue
        j = np.argmin(np.where(block, along, np.inf), axis=1)
        pj = points[rows, j]
        # sides are taken about the line from j to the goal, which does not
        # move as i does, so the chosen point stays put from step to step
        v = g - pj
        v = v / np.maximum(np.sqrt((v * v).sum(-1)), 1e-12)[:, None]
        n = np.stack([-v[:, 1], v[:, 0]], axis=-1)
        away = np.where(((p - pj) * n).sum(-1) < 0, -1.0, 1.0)
        others = np.ones((B, N), dtype=bool)
        others[:, i] = False
        chosen = g.copy()
        done = ~block.any(axis=1)
        for off in offsets:
            for side in (away, -away):
                t = pj + (side * off)[:, None] * n + ahead * v
                t[:, 0] = np.clip(t[:, 0], xmin + wall_inset, xmax - wall_inset)
                t[:, 1] = np.clip(t[:, 1], ymin + wall_inset, ymax - wall_inset)
                dt = t[:, None] - points
                free = np.all(~others | (np.sqrt((dt * dt).sum(-1)) >= clearance), axis=1)
                take = free & ~done
                chosen[take] = t[take]
                done |= take
        # if the way to the detour point itself grazes j, circle j towards it
        e = p - pj
        r = np.sqrt((e * e).sum(-1))
        w = chosen - p
        frac = np.clip(((pj - p) * w).sum(-1) / np.maximum((w * w).sum(-1), 1e-12), 0.0, 1.0)
        near = p + frac[:, None] * w - pj
        grazes = block.any(axis=1) & (np.sqrt((near * near).sum(-1)) < clearance)
        if grazes.any():
            turn = np.where(e[:, 0] * (chosen - pj)[:, 1] - e[:, 1] * (chosen - pj)[:, 0] >= 0, 1.0, -1.0)
            c, sn = math.cos(orbit_lead), math.sin(orbit_lead)
            eu = e / np.maximum(r, 1e-12)[:, None]
            rot = np.stack([c * eu[:, 0] - turn * sn * eu[:, 1], turn * sn * eu[:, 0] + c * eu[:, 1]], axis=-1)
            orbit = pj + (np.maximum(r, clearance) + orbit_gain)[:, None] * rot
            orbit[:, 0] = np.clip(orbit[:, 0], xmin + wall_inset, xmax - wall_inset)
            orbit[:, 1] = np.clip(orbit[:, 1], ymin + wall_inset, ymax - wall_inset)
            chosen = np.where(grazes[:, None], orbit, chosen)
        out[:, i] = chosen
    return out


# closest two control points get under the barrier: safety radius plus twice
# the projection distance
clearance_push = 0.27


def goal_actions(points: np.ndarray, goals: np.ndarray, steps: np.ndarray, bounds,
                 detour: bool = True) -> np.ndarray:
    """For each robot the move that lands closest to its (detoured) goal, ``(B, N)``.

    Ties go to the lowest action index, so a robot already within half a
    step of its goal stays put.
    """
    targets = detour_goals(points, goals, bounds) if detour else goals
    cand = points[:, :, None, :] + steps[..., None, None] * ACTION_DIRECTIONS       # (B, N, 5, 2)
    d = np.sqrt(((cand - targets[:, :, None, :]) ** 2).sum(axis=-1))
    if detour and points.shape[1] > 1:
        # moves that would push into another robot's barrier are pointless,
        # unless the target itself sits that close to the other robot
        gap = cand[:, :, :, None, :] - points[:, None, None, :, :]                # (B, N, 5, N, 2)
        gap = np.sqrt((gap * gap).sum(-1))
        now = np.sqrt(((points[:, :, None] - points[:, None]) ** 2).sum(-1))[:, :, None, :]
        tj = np.sqrt(((targets[:, :, None] - points[:, None]) ** 2).sum(-1))[:, :, None, :]
        n = points.shape[1]
        self_mask = np.eye(n, dtype=bool)[None, :, None, :]
        pushing = ((gap < np.minimum(clearance_push, tj)) & (gap < now) & ~self_mask).any(axis=-1)
        pushing[..., 0] = False
        d = np.where(pushing, np.inf, d)
    return np.argmin(d, axis=-1)


class Runner:
    """Batched policy evaluation for one scenario configuration."""

    def __init__(self, policies: PolicySpec | Sequence[PolicySpec], config: ScenarioConfig, scenario):
        n = config.num_robots
        if isinstance(policies, PolicySpec):
            policies = [policies] * n
        if len(policies) != n:
            raise ConfigError(f"{len(policies)} policies given for {n} robots")
        self.policies = list(policies)
        self.config = config
        self.scenario = scenario
        self.weights = {}
        for p in self.policies:
            if p.kind == "feedforward_file" and p.path not in self.weights:
                self.weights[p.path] = load_weights(p.path)

    def __call__(self, state, obs: np.ndarray) -> np.ndarray:
        cfg = self.config
        B, N = obs.shape[:2]
        keys = rng.fold(state.keys, rng.POLICY, state.step)
        actions = np.zeros((B, N), dtype=np.int64)
        kinds = {p.kind for p in self.policies}
        if kinds & {"scripted_goal", "prey_chaser"}:
            pts = control_points(state.poses, cfg)
            goals = self.scenario.goals(state.scenario, state.poses, cfg)
            if "prey_chaser" in kinds and "prey" in state.scenario:
                radius = 0.2 * cfg.extras.get("tag_radius", 0.25)
                chase = encircle_goals(state.scenario["prey"], state.poses[..., :2], radius)
            else:
                chase = goals
            steps = np.minimum(np.asarray(self.scenario.step_sizes(state.scenario, state.poses, cfg)),
                               reachable_step(cfg))
            scripted = goal_actions(pts, goals, steps, cfg.sim.bounds)
            # chasers close in on purpose, so no detours around teammates
            chased = goal_actions(pts, chase, steps, cfg.sim.bounds, detour=False) if chase is not goals else scripted
        if "random" in kinds:
            rand = rng.integers(keys, NUM_ACTIONS, (N,))
        for i, p in enumerate(self.policies):
            if p.kind == "random":
                actions[:, i] = rand[:, i]
            elif p.kind == "scripted_goal":
                actions[:, i] = scripted[:, i]
            elif p.kind == "prey_chaser":
                actions[:, i] = chased[:, i]
            else:
                logits = self.weights[p.path].logits(obs[:, i])
                if p.greedy:
                    actions[:, i] = np.argmax(logits, axis=-1)
                else:
                    u = rng.uniform(rng.fold(keys, i), ())
                    actions[:, i] = _sample_logits(logits, u, p.temperature)
        return actions
