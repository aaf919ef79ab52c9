import numpy as np

from botarena import default_config, get_scenario
from botarena.engine import episode_keys, reset_from_keys
from botarena.render import GREEN, PX_PER_M, RED, draw_frame, render_frames


def single_state(name):
    cfg = default_config(name)
    sc = get_scenario(name)
    state, _ = reset_from_keys(cfg, episode_keys(0, [0]), sc)
    st = {k: np.asarray(v)[0] for k, v in state.scenario.items()}
    return cfg, st, state.poses[0]


def pixel(img, cfg, xy):
    x = (xy[0] + cfg.sim.arena_half_width) * PX_PER_M
    y = (cfg.sim.arena_half_height - xy[1]) * PX_PER_M
    return img.getpixel((int(round(x)), int(round(y))))


def test_every_scenario_draws():
    from botarena import scenario_names
    for name in scenario_names():
        cfg, st, poses = single_state(name)
        img = draw_frame(cfg, poses, st, 1)
        assert img.size == (640, 428)


def test_prey_turns_red_while_flashing():
    cfg, st, _ = single_state("predator_prey")
    far = np.array([[1.5, 0.9, 0.0], [1.5, -0.9, 0.0], [-1.5, 0.9, 0.0]])
    st["prey"] = np.array([0.0, 0.0])
    st["flash"] = 0
    assert pixel(draw_frame(cfg, far, st, 1), cfg, (0, 0)) == GREEN
    st["flash"] = 2
    assert pixel(draw_frame(cfg, far, st, 1), cfg, (0, 0)) == RED


def test_tagged_landmarks_disappear():
    cfg, st, poses = single_state("discovery")
    far = np.tile([[1.55, 0.95, 0.0]], (poses.shape[0], 1))
    st["landmarks"] = np.array([[-1.0, 0.5], [0.5, -0.5]] + [[0.0, 0.0]] * (st["landmarks"].shape[0] - 2))
    st["tagged"] = np.zeros(st["landmarks"].shape[0], dtype=bool)
    st["sensed"] = np.zeros_like(st["tagged"])
    background = (250, 250, 250)
    assert pixel(draw_frame(cfg, far, st, 1), cfg, (-1.0, 0.5)) != background
    st["tagged"][0] = True
    img = draw_frame(cfg, far, st, 1)
    assert pixel(img, cfg, (-1.0, 0.5)) == background
    assert pixel(img, cfg, (0.5, -0.5)) != background


def test_render_frames_writes_one_png_per_step(tmp_path):
    cfg, st, poses = single_state("navigation")
    paths = render_frames(cfg, np.stack([poses] * 4), [st] * 3, tmp_path, gif=False)
    assert [p.name for p in paths] == ["frame_00001.png", "frame_00002.png", "frame_00003.png"]
