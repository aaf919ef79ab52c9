"""Layout loading, spawn sampling and observation helpers shared by scenarios."""
from __future__ import annotations

import functools
import math
import sys
from importlib import resources

import numpy as np

from .. import rng
from ..framework import ConfigError, HeterogeneitySpec, ScenarioConfig
from ..geometry import projected_points

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

LAYOUT_FORMAT_VERSION = 1


@functools.lru_cache(maxsize=None)
def load_layout() -> dict:
    """The packaged default-layout file, parsed."""
    text = resources.files("botarena").joinpath("data/layout.toml").read_text()
    layout = tomllib.loads(text)
    if layout.get("format_version") != LAYOUT_FORMAT_VERSION:
        raise ConfigError(f"unsupported layout format_version {layout.get('format_version')!r}")
    return layout


def section(name: str) -> dict:
    return dict(load_layout()[name])


def common() -> dict:
    return dict(load_layout()["common"])


def make_config(name: str, sec: dict, *, step_sizes=None, heterogeneity=None,
                extras: dict | None = None) -> ScenarioConfig:
    n = int(sec["num_robots"])
    step = float(sec.get("step_size", 0.2))
    return ScenarioConfig(
        scenario_name=name,
        num_robots=n,
        max_steps=int(sec["max_steps"]),
        step_sizes=tuple(step_sizes) if step_sizes is not None else (step,) * n,
        heterogeneity=heterogeneity or HeterogeneitySpec.robot_ids(n),
        rewards=dict(sec["rewards"]),
        sub_steps=int(sec.get("sub_steps", 10)),
        extras=extras or {},
    )


def inset_rect(rect, inset, config: ScenarioConfig):
    """``rect`` intersected with the arena shrunk by ``inset``."""
    W, H = config.sim.arena_half_width - inset, config.sim.arena_half_height - inset
    xmin, xmax, ymin, ymax = rect
    out = (max(xmin, -W), min(xmax, W), max(ymin, -H), min(ymax, H))
    if out[0] > out[1] or out[2] > out[3]:
        raise ConfigError(f"region {rect} has no room once kept {inset} m from the walls")
    return out


def spawn_inset(config: ScenarioConfig) -> float:
    # projected points start inside the inflated wall barrier
    return config.barrier.boundary_margin + 2.0 * config.gains.projection_distance + 1e-6


def _draw(keys, path, rect, extra=0):
    u = rng.uniform(rng.fold(keys, *path), (2 + extra,))
    xmin, xmax, ymin, ymax = rect
    return xmin + (xmax - xmin) * u[:, 0], ymin + (ymax - ymin) * u[:, 1], u


def spawn_poses(keys: np.ndarray, config: ScenarioConfig, region=None, robots=None) -> np.ndarray:
    """Rejection-sample robot poses, one robot at a time, per instance.

    Centres stay ``safety_radius + spawn_clearance`` apart and projected
    points ``safety_radius + 2 l`` apart, so every barrier starts satisfied.
    ``region`` may be one rectangle or one per robot.
    """
    c = common()
    B, n = keys.size, config.num_robots if robots is None else robots
    R, l = config.barrier.safety_radius, config.gains.projection_distance
    sep_c, sep_p = R + c["spawn_clearance"], R + 2.0 * l
    regions = region if region is not None else config.sim.bounds
    if not isinstance(regions[0], (list, tuple)):
        regions = [regions] * n
    poses = np.zeros((B, n, 3))
    for i in range(n):
        rect = inset_rect(regions[i], spawn_inset(config), config)
        placed = np.zeros(B, dtype=bool)
        for attempt in range(int(c["max_spawn_attempts"])):
            x, y, u = _draw(keys, (rng.SPAWN, i, attempt), rect, extra=1)
            cand = np.stack([x, y, math.pi - 2.0 * math.pi * u[:, 2]], axis=-1)
            ok = ~placed
            if i:
                prev = poses[:, :i]
                dc = _hypot(prev[..., 0] - x[:, None], prev[..., 1] - y[:, None])
                pc = projected_points(cand, l)
                pp = projected_points(prev, l)
                dp = _hypot(pp[..., 0] - pc[:, None, 0], pp[..., 1] - pc[:, None, 1])
                ok &= np.all(dc >= sep_c, axis=1) & np.all(dp >= sep_p, axis=1)
            poses[ok, i] = cand[ok]
            placed |= ok
            if placed.all():
                break
        else:
            env = int(np.flatnonzero(~placed)[0])
            raise ConfigError(f"environment {env}: could not place robot {i} after "
                              f"{c['max_spawn_attempts']} attempts")
    return poses


def sample_points(keys: np.ndarray, count: int, rect, min_sep: float, purpose: int,
                  avoid: np.ndarray | None = None, avoid_dist: float = 0.0) -> np.ndarray:
    """``count`` points per instance in ``rect``, pairwise ``>= min_sep`` apart
    and ``>= avoid_dist`` from every point of ``avoid (B, P, 2)``."""
    c = common()
    B = keys.size
    pts = np.zeros((B, count, 2))
    for k in range(count):
        placed = np.zeros(B, dtype=bool)
        for attempt in range(int(c["max_spawn_attempts"])):
            x, y, _ = _draw(keys, (purpose, k, attempt), rect)
            ok = ~placed
            if k:
                d = _hypot(pts[:, :k, 0] - x[:, None], pts[:, :k, 1] - y[:, None])
                ok &= np.all(d >= min_sep, axis=1)
            if avoid is not None and avoid.shape[1]:
                d = _hypot(avoid[..., 0] - x[:, None], avoid[..., 1] - y[:, None])
                ok &= np.all(d >= avoid_dist, axis=1)
            pts[ok, k, 0] = x[ok]
            pts[ok, k, 1] = y[ok]
            placed |= ok
            if placed.all():
                break
        else:
            env = int(np.flatnonzero(~placed)[0])
            raise ConfigError(f"environment {env}: could not place point {k} after "
                              f"{c['max_spawn_attempts']} attempts")
    return pts


def _hypot(dx, dy):
    # sqrt is correctly rounded everywhere; np.hypot is not guaranteed to be
    return np.sqrt(dx * dx + dy * dy)


def others_relative(xy: np.ndarray) -> np.ndarray:
    """For each robot, the other robots' positions relative to it, ``(B, N, 2(N-1))``."""
    B, N, _ = xy.shape
    rel = xy[:, None, :, :] - xy[:, :, None, :]          # [b, i, j] = x_j - x_i
    idx = np.array([[j for j in range(N) if j != i] for i in range(N)], dtype=np.int64).reshape(N, N - 1)
    out = rel[:, np.arange(N)[:, None], idx]              # (B, N, N-1, 2)
    return out.reshape(B, N, 2 * (N - 1))


def broadcast_rows(x: np.ndarray, n: int) -> np.ndarray:
    """Repeat a per-instance vector ``(B, D)`` for every robot ``(B, n, D)``."""
    return np.repeat(x[:, None, :], n, axis=1)


def rect_center(rect) -> np.ndarray:
    return np.array([(rect[0] + rect[1]) / 2, (rect[2] + rect[3]) / 2])


def rounded_normal(keys: np.ndarray, purpose: int, mean: float, variance: float) -> np.ndarray:
    z = rng.normal(rng.fold(keys, purpose), ())
    return np.maximum(np.rint(mean + math.sqrt(variance) * z), 0.0)


# stream purposes for scenario-level draws (folded under the instance key)
GOALS = 11
OBJECTS = 12
LEVELS = 13
TILES = 14
AMOUNTS = 15
PREY = 16
WAYPOINTS = 17
REQUESTS = 18


def center_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])
