"""Headless raster frames of one environment's episode.

Frames are drawn with Pillow from poses plus the scenario state after each
step, so anything a trajectory file does not store (zones, tiles, prey,
shelves) is recovered by replaying it.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .framework import ScenarioConfig

PX_PER_M = 200
LEGEND_H = 28
ROBOT_COLORS = [(31, 119, 180), (255, 127, 14), (23, 190, 207), (148, 103, 189),
                (140, 86, 75), (227, 119, 194), (127, 127, 127), (188, 189, 34)]
TILE_COLORS = {0: (205, 190, 160), 1: (225, 240, 250), 2: (120, 170, 220)}

GREEN = (60, 170, 80)
RED = (210, 50, 50)
GREY = (200, 200, 200)
ZONE_OUTLINE = (90, 90, 90)


class Canvas:
    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.W = config.sim.arena_half_width
        self.H = config.sim.arena_half_height
        self.size = (int(2 * self.W * PX_PER_M), int(2 * self.H * PX_PER_M) + LEGEND_H)
        self.img = Image.new("RGB", self.size, (250, 250, 250))
        self.draw = ImageDraw.Draw(self.img)
        self.legend: list[tuple[str, tuple]] = []

    def px(self, x, y):
        return (float(x) + self.W) * PX_PER_M, (self.H - float(y)) * PX_PER_M

    def rect(self, r, fill=None, outline=ZONE_OUTLINE, label=None, width=1):
        x0, y0 = self.px(r[0], r[3])
        x1, y1 = self.px(r[1], r[2])
        self.draw.rectangle([x0, y0, x1, y1], fill=fill, outline=outline, width=width)
        if label:
            self.add_legend(label, fill or outline)

    def disc(self, xy, radius, fill, outline=None):
        cx, cy = self.px(*xy)
        r = radius * PX_PER_M
        self.draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=fill, outline=outline)

    def cross(self, xy, color, size=0.04):
        cx, cy = self.px(*xy)
        s = size * PX_PER_M
        self.draw.line([cx - s, cy - s, cx + s, cy + s], fill=color, width=2)
        self.draw.line([cx - s, cy + s, cx + s, cy - s], fill=color, width=2)

    def add_legend(self, label, color):
        if label not in [l for l, _ in self.legend]:
            self.legend.append((label, color))

    def robots(self, poses, colors=None):
        R = self.cfg.barrier.safety_radius / 2
        for i, (x, y, th) in enumerate(poses):
            c = colors[i] if colors is not None else ROBOT_COLORS[i % len(ROBOT_COLORS)]
            self.disc((x, y), R, c, outline=(20, 20, 20))
            tip = (x + 1.6 * R * math.cos(th), y + 1.6 * R * math.sin(th))
            self.draw.line([self.px(x, y), self.px(*tip)], fill=(20, 20, 20), width=2)
        self.add_legend("robot", ROBOT_COLORS[0])

    def finish(self, title: str) -> Image.Image:
        top = self.size[1] - LEGEND_H
        self.draw.rectangle([0, 0, self.size[0] - 1, top - 1], outline=(0, 0, 0))
        x = 6
        self.draw.text((x, top + 8), title, fill=(0, 0, 0))
        x += 8 * len(title) + 12
        for label, color in self.legend:
            self.draw.rectangle([x, top + 9, x + 10, top + 19], fill=color, outline=(0, 0, 0))
            self.draw.text((x + 14, top + 8), label, fill=(0, 0, 0))
            x += 14 + 7 * len(label) + 14
        return self.img


# --- per-scenario layers -------------------------------------------------------

def _navigation(cv, st, poses):
    for i, g in enumerate(st["goals"]):
        cv.cross(g, ROBOT_COLORS[i % len(ROBOT_COLORS)])
    cv.add_legend("goal", (0, 0, 0))


def _random_waypoints(cv, st, poses):
    for i, g in enumerate(st["waypoints"]):
        cv.cross(g, ROBOT_COLORS[i % len(ROBOT_COLORS)], size=0.03)
    cv.add_legend("waypoint", (0, 0, 0))


def _predator_prey(cv, st, poses):
    color = RED if st["flash"] > 0 else GREEN
    cv.disc(st["prey"], cv.cfg.extras.get("tag_radius", 0.25), None, outline=GREY)
    cv.disc(st["prey"], 0.05, color)
    cv.add_legend("prey", GREEN)
    cv.add_legend("tagged", RED)


def _discovery(cv, st, poses):
    for lm, sensed, tagged in zip(st["landmarks"], st["sensed"], st["tagged"]):
        if tagged:
            continue              # tagged landmarks leave the map
        cv.disc(lm, 0.04, (230, 160, 0) if sensed else GREY, outline=(60, 60, 60))
    cv.add_legend("landmark", GREY)
    cv.add_legend("sensed", (230, 160, 0))


def _foraging(cv, st, poses):
    r = cv.cfg.extras["foraging_radius"]
    for p, level, gone in zip(st["pos"], st["level"], st["foraged"]):
        if gone:
            continue
        cv.disc(p, r, None, outline=GREY)
        cv.disc(p, 0.05, (180, 120, 40))
        x, y = cv.px(*p)
        cv.draw.text((x - 3, y - 6), str(int(level)), fill=(255, 255, 255))
    cv.add_legend("resource", (180, 120, 40))


def _material_transport(cv, st, poses):
    ex = cv.cfg.extras
    cv.rect(ex["dropoff_zone"], fill=(220, 235, 220), label="dropoff")
    cx, cy, r = ex["circle_zone"]
    cv.disc((cx, cy), r, (235, 225, 200), outline=ZONE_OUTLINE)
    cv.rect(ex["rect_zone"], fill=(235, 225, 200), label="material")
    cv.draw.text(cv.px(cx - 0.05, cy + 0.03), f"{int(st['circle'])}", fill=(0, 0, 0))
    rx, ry = (ex["rect_zone"][0] + ex["rect_zone"][1]) / 2, (ex["rect_zone"][2] + ex["rect_zone"][3]) / 2
    cv.draw.text(cv.px(rx - 0.05, ry + 0.03), f"{int(st['rect'])}", fill=(0, 0, 0))


def _warehouse(cv, st, poses):
    ex = cv.cfg.extras
    cv.rect(ex["green_pickup"], fill=(200, 235, 200), label="green")
    cv.rect(ex["green_dropoff"], fill=(200, 235, 200))
    cv.rect(ex["red_pickup"], fill=(240, 200, 200), label="red")
    cv.rect(ex["red_dropoff"], fill=(240, 200, 200))
    for (x, y, _), loaded in zip(poses, st["loaded"]):
        if loaded:
            cv.disc((x, y), 0.12, None, outline=(0, 0, 0))


def _rware(cv, st, poses):
    from .scenarios.rware import slot_positions
    ex = cv.cfg.extras
    cv.rect(ex["dropoff_zone"], fill=(220, 235, 220), label="dropoff")
    h = ex["slot_half_size"]
    requested = set(int(r) for r in st["requests"])
    for (x, y), shelf in zip(slot_positions(cv.cfg), st["slot_shelf"]):
        cv.rect((x - h, x + h, y - h, y + h), outline=GREY)
        if shelf >= 0:
            color = (230, 160, 0) if shelf in requested else (150, 120, 90)
            cv.rect((x - 0.7 * h, x + 0.7 * h, y - 0.7 * h, y + 0.7 * h), fill=color)
    for (x, y, _), held in zip(poses, st["carried"]):
        if held >= 0:
            cv.disc((x, y), 0.12, None, outline=(230, 160, 0) if held in requested else (150, 120, 90))
    cv.add_legend("shelf", (150, 120, 90))
    cv.add_legend("requested", (230, 160, 0))


def _arctic_transport(cv, st, poses):
    tiles = st["tiles"]
    rows, cols = tiles.shape
    cw, ch = 2 * cv.W / cols, 2 * cv.H / rows
    for r in range(rows):
        for c in range(cols):
            x0, y0 = -cv.W + c * cw, -cv.H + r * ch
            cv.rect((x0, x0 + cw, y0, y0 + ch), fill=TILE_COLORS[int(tiles[r, c])], outline=(180, 180, 180))
    cv.add_legend("ground", TILE_COLORS[0])
    cv.add_legend("ice", TILE_COLORS[1])
    cv.add_legend("water", TILE_COLORS[2])
    cv.rect(cv.cfg.extras["goal_zone"], outline=GREEN, label="goal", width=4)


LAYERS = {
    "navigation": _navigation,
    "random_waypoints": _random_waypoints,
    "predator_prey": _predator_prey,
    "discovery": _discovery,
    "foraging": _foraging,
    "material_transport": _material_transport,
    "warehouse": _warehouse,
    "rware": _rware,
    "arctic_transport": _arctic_transport,
}


def draw_frame(config: ScenarioConfig, poses: np.ndarray, scenario_state: dict | None,
               step: int) -> Image.Image:
    """One frame: ``poses (N, 3)`` and the single-instance scenario state."""
    cv = Canvas(config)
    layer = LAYERS.get(config.scenario_name)
    if layer is not None and scenario_state is not None:
        layer(cv, scenario_state, poses)
    cv.robots(poses)
    return cv.finish(f"{config.scenario_name}  step {step}")


def render_frames(config: ScenarioConfig, poses: np.ndarray, states: list, out_dir, *,
                  fps: float = 10.0, gif: bool = True) -> list[Path]:
    """Write ``frame_00001.png ...`` for each step (``poses (T+1, N, 3)``,
    ``states`` one dict per step) and optionally ``episode.gif``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths, frames = [], []
    for t, st in enumerate(states, start=1):
        img = draw_frame(config, poses[t], st, t)
        p = out / f"frame_{t:05d}.png"
        img.save(p)
        paths.append(p)
        frames.append(img)
    if gif and frames:
        frames[0].save(out / "episode.gif", save_all=True, append_images=frames[1:],
                       duration=int(1000 / fps), loop=0)
    return paths
