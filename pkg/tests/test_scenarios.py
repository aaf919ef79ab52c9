"""Scenario rules on hand-built states.

Each golden drives ``transition`` directly with scripted poses so that the
expected cumulative reward can be worked out by hand from the coefficients.
"""
import math

import numpy as np
import pytest

from botarena import default_config, get_scenario
from botarena.engine import episode_keys
from botarena.scenarios.arctic_transport import ICE, WATER, GROUND, tile_index
from botarena.scenarios.predator_prey import PREY_CANDIDATES, prey_heuristic

KEYS = episode_keys(0, [0])


def poses(*xy):
    return np.array([[[x, y, 0.0] for x, y in xy]], dtype=np.float64)


def run(name, state, pose_seq, config=None):
    cfg = config or default_config(name)
    sc = get_scenario(name)
    total, rewards, metrics = 0.0, [], None
    for p in pose_seq:
        state, r, metrics = sc.transition(state, p, np.zeros((1, cfg.num_robots), dtype=int), cfg, KEYS)
        rewards.append(float(r[0]))
        total += float(r[0])
    return total, rewards, state, metrics


# --- warehouse ------------------------------------------------------------

def _warehouse_state():
    return {"loaded": np.zeros((1, 4), dtype=bool), "loads": np.zeros(1, dtype=np.int64),
            "deliveries": np.zeros(1, dtype=np.int64)}


def test_warehouse_golden():
    park = [(0.0, -0.5), (0.4, -0.5), (0.8, -0.5)]
    seq = [poses((1.3, 0.5), *park), poses((0.0, 0.5), *park), poses((-1.3, 0.5), *park)]
    total, rewards, st, m = run("warehouse", _warehouse_state(), seq)
    assert total == pytest.approx(4.0, abs=1e-9)
    assert rewards == pytest.approx([1.0, 0.0, 3.0])
    assert m["deliveries"][0] == 1 and not st["loaded"].any()


def test_warehouse_color_gating_and_reload():
    cfg = default_config("warehouse")
    # red robot 2 sits in the green pickup, green robot 0 loads twice
    seq = [poses((1.3, 0.5), (0.0, 0.0), (1.3, 0.6), (0.4, 0.0))] * 3
    total, _, st, _ = run("warehouse", _warehouse_state(), seq, cfg)
    assert total == pytest.approx(1.0)
    assert st["loaded"][0].tolist() == [True, False, False, False]


# --- navigation ------------------------------------------------------------

def test_navigation_golden():
    goals = np.array([[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.5]]])
    at = poses((1.0, 0.0), (1.0, 0.5), (-1.0, 0.25))          # distances 1.0, 0.5, 0.25
    total, rewards, _, m = run("navigation", {"goals": goals}, [at] * 3)
    assert rewards == pytest.approx([-1.75] * 3, abs=1e-12)
    assert total == pytest.approx(-5.25, abs=1e-9)
    assert m["success"][0] == 0.0
    total, _, _, m = run("navigation", {"goals": goals}, [poses(*goals[0])])
    assert total == 0.0 and m["success"][0] == 1.0


# --- material transport ------------------------------------------------------

def _mt_state(circle=75.0, rect=15.0, load=(0, 0, 0, 0)):
    return {"circle": np.array([circle]), "rect": np.array([rect]), "load": np.array([load], dtype=float),
            "delivered": np.zeros(1), "initial": np.array([circle + rect + sum(load)])}


MID = [(-0.5, 0.6), (-0.5, -0.6), (0.5, 0.6), (0.5, -0.6)]


def test_material_transport_golden():
    seq = [poses((0.0, 0.0), *MID[1:]),                              # fast robot loads 5 from the circle
           poses((0.0, 0.0), MID[1], (1.3, 0.0), MID[3]),            # slow robot loads 15 from the box
           poses((-1.3, 0.5), MID[1], (-1.3, -0.5), MID[3])]         # both unload 20
    total, rewards, st, m = run("material_transport", _mt_state(), seq)
    assert rewards == pytest.approx([1.25 - 0.1, 3.75 - 0.1, 15.0 - 0.1], abs=1e-12)
    assert total == pytest.approx(19.7, abs=1e-9)
    assert st["circle"][0] == 70 and st["rect"][0] == 0 and m["delivered"][0] == 20


def test_material_transport_examples():
    _, r, st, _ = run("material_transport", _mt_state(), [poses((0.0, 0.0), *MID[1:])])
    assert r[0] + 0.1 == pytest.approx(1.25) and st["load"][0, 0] == 5
    _, r, st, _ = run("material_transport", _mt_state(0, 0, (0, 0, 15, 0)),
                      [poses(*MID[:2], (-1.3, 0.0), MID[3])])
    assert r[0] == pytest.approx(11.25) and st["load"][0, 2] == 0
    total, _, _, _ = run("material_transport", _mt_state(0, 0), [poses(*MID)] * 3)
    assert total == 0.0


def test_material_loading_respects_remaining():
    _, r, st, _ = run("material_transport", _mt_state(3, 15), [poses((0.0, 0.1), (0.0, -0.1), *MID[2:])])
    # robot 0 takes the last 3, robot 1 finds the circle empty
    assert st["load"][0].tolist() == [3, 0, 0, 0]
    assert r[0] == pytest.approx(0.25 * 3 - 0.1)


# --- arctic transport -------------------------------------------------------

def _tiles(fill=ICE):
    t = np.full((1, 5, 8), fill, dtype=np.int64)
    t[:, :, 0] = t[:, :, -1] = GROUND
    return {"tiles": t}


def test_arctic_golden():
    drones = [(-1.0, 0.5), (-1.0, -0.5)]
    seq = [poses(*drones, (0.2, 0.3), (0.2, -0.3))] * 3        # each mover 1.0 from the goal zone
    total, rewards, _, m = run("arctic_transport", _tiles(), seq)
    assert rewards == pytest.approx([-0.20] * 3, abs=1e-12)
    assert total == pytest.approx(-0.60, abs=1e-9)
    total, _, _, m = run("arctic_transport", _tiles(), [poses(*drones, (1.3, 0.3), (1.4, -0.3))])
    assert total == 0.0 and m["success"][0] == 1.0


def test_arctic_step_sizes():
    cfg = default_config("arctic_transport")
    sc = get_scenario("arctic_transport")
    p = poses((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0))     # robot 2 water, robot 3 ice
    assert sc.step_sizes(_tiles(ICE), p, cfg)[0].tolist() == [0.2, 0.2, 0.1, 0.3]
    assert sc.step_sizes(_tiles(WATER), p, cfg)[0].tolist() == [0.2, 0.2, 0.3, 0.1]
    ground = poses((-1.5, 0), (-1.5, 0), (-1.5, 0), (-1.5, 0))
    assert sc.step_sizes(_tiles(ICE), ground, cfg)[0].tolist() == [0.2] * 4


def test_tile_lookup_is_total():
    cfg = default_config("arctic_transport")
    xy = np.random.default_rng(0).uniform(-3, 3, (1000, 2))
    r, c = tile_index(xy, cfg)
    assert np.all((0 <= r) & (r < 5) & (0 <= c) & (c < 8))
    r, c = tile_index(np.array([[-1.6, -1.0], [1.6, 1.0], [0.0, 0.0]]), cfg)
    assert r.tolist() == [0, 4, 2] and c.tolist() == [0, 7, 4]


# --- discovery --------------------------------------------------------------

def _disc_state():
    return {"landmarks": np.array([[[0.0, 0.0], [1.0, 0.5]]]), "sensed": np.zeros((1, 2), dtype=bool),
            "tagged": np.zeros((1, 2), dtype=bool)}


def test_discovery_golden():
    far = [(-1.2, 0.8), (-1.2, -0.8), (-0.8, 0.8), (-0.8, -0.8)]
    seq = [poses(*far),
           poses((0.3, 0.0), far[1], (0.1, 0.1), far[3]),            # sensed and tagged together
           poses(*far[:3], (1.0, 0.4))]                              # tagged without sensing
    total, rewards, st, m = run("discovery", _disc_state(), seq)
    assert rewards == pytest.approx([-0.05, 1 + 5 - 0.05, 5.0], abs=1e-12)
    assert total == pytest.approx(10.9, abs=1e-9)
    assert m["landmarks_tagged"][0] == 2 and m["landmarks_sensed"][0] == 1
    total, _, _, _ = run("discovery", st, seq)
    assert total == 0.0


def test_discovery_hides_unsensed_landmarks():
    cfg = default_config("discovery")
    sc = get_scenario("discovery")
    st = _disc_state()
    st["sensed"][0, 1] = True
    obs = sc.observe(st, poses((0, 0), (0, 0.3), (0.3, 0), (0.3, 0.3)), cfg)
    marks = obs[0, 0, 3:7]
    assert abs(marks[0]) > 1.6 and marks[2:].tolist() == [1.0, 0.5]


# --- foraging --------------------------------------------------------------

def _forage_state():
    return {"pos": np.array([[[0.0, 0.0], [1.0, 0.5]]]), "level": np.array([[3.0, 1.0]]),
            "foraged": np.zeros((1, 2), dtype=bool), "count": np.zeros(1, dtype=np.int64)}


def test_foraging_golden():
    seq = [poses((0.2, 0.0), (-1.0, -0.6), (-1.3, -0.6)),            # level 1 alone: not enough
           poses((0.2, 0.0), (-0.2, 0.0), (-1.3, -0.6)),             # levels 1 + 2 forage the level-3
           poses((0.2, 0.0), (-0.2, 0.0), (1.0, 0.3))]               # level 3 forages the level-1
    total, rewards, st, m = run("foraging", _forage_state(), seq)
    assert rewards == pytest.approx([0.0, 3.0, 1.0])
    assert total == pytest.approx(4.0, abs=1e-9)
    assert m["resources_foraged"][0] == 2
    assert run("foraging", st, seq[-1:])[0] == 0.0


# --- predator-prey -----------------------------------------------------------

def _pp_state(prey=(0.0, 0.0)):
    return {"prey": np.array([prey], dtype=float), "tags": np.zeros(1, dtype=np.int64),
            "flash": np.zeros(1, dtype=np.int64)}


def test_predator_prey_containment_golden():
    r = 0.12
    tri = [(r * math.cos(a), r * math.sin(a)) for a in (0.5, 0.5 + 2 * math.pi / 3, 0.5 + 4 * math.pi / 3)]
    total, rewards, st, m = run("predator_prey", _pp_state(), [poses(*tri)] * 3)
    assert rewards == [10.0] * 3 and total == 30.0
    assert m["tags"][0] == 3 and st["flash"][0] == 3


def test_predator_prey_no_tag_and_flash_decay():
    st = _pp_state()
    st["flash"][0] = 2
    far = poses((1.2, 0.8), (1.2, -0.8), (-1.2, 0.8))
    total, _, st, m = run("predator_prey", st, [far])
    assert total == 0.0 and st["flash"][0] == 1 and m["tags"][0] == 0


def test_prey_heuristic_examples():
    step = 0.1
    assert np.allclose(prey_heuristic((0.0, 0.0), [(-0.5, 0.0)], step), (0.1, 0.0))
    # equidistant predators north and south: an east or west move wins, east first
    assert np.allclose(prey_heuristic((0.0, 0.0), [(0.0, 0.4), (0.0, -0.4)], step), (0.1, 0.0))


@pytest.mark.parametrize("seed", range(20))
def test_prey_heuristic_matches_exhaustive_search(seed):
    g = np.random.default_rng(seed)
    prey = g.uniform([-1.6, -1.0], [1.6, 1.0])
    if seed < 5:
        prey = np.array([1.58, 0.97]) * np.sign(g.uniform(-1, 1, 2))   # corners
    preds = g.uniform([-1.6, -1.0], [1.6, 1.0], (3, 2))
    best, best_score = None, -np.inf
    for c in PREY_CANDIDATES:
        p = prey + 0.1 * c
        if not (-1.6 <= p[0] <= 1.6 and -1.0 <= p[1] <= 1.0):
            continue
        s = min(math.dist(p, q) for q in preds)
        if s > best_score:
            best, best_score = p, s
    assert np.allclose(prey_heuristic(prey, preds, 0.1), best, atol=1e-12)


# --- rware -----------------------------------------------------------------

def _rware_state(requests=(3, 4)):
    slot_shelf = np.array([[0, 1, 2, 3, 4, 5, -1, -1]])
    return {"slot_shelf": slot_shelf, "carried": np.full((1, 3), -1), "requests": np.array([requests]),
            "prev_slot": np.full((1, 3), -1), "prev_drop": np.zeros((1, 3), dtype=bool),
            "dropoffs": np.zeros(1, dtype=np.int64)}


PARK = [(-0.8, 0.7), (-0.8, -0.7)]


def test_rware_golden():
    seq = [poses((1.0, -0.3), *PARK),     # slot 3 holds shelf 3: pick it up
           poses((-0.5, 0.0), *PARK),
           poses((-1.3, 0.0), *PARK)]     # requested shelf into the dropoff
    total, rewards, st, m = run("rware", _rware_state(), seq)
    assert rewards == [0.0, 0.0, 1.0] and total == 1.0
    assert st["carried"][0, 0] == 3 and st["slot_shelf"][0, 3] == -1
    assert m["shelf_dropoffs"][0] == 1
    req = st["requests"][0].tolist()
    assert 4 in req and len(set(req)) == 2
    assert req[0] in (0, 1, 2, 5)


def test_rware_non_requested_shelf_scores_nothing():
    seq = [poses((-0.2, -0.3), *PARK), poses((-1.3, 0.0), *PARK)]   # shelf 0 is not requested
    total, _, st, _ = run("rware", _rware_state(), seq)
    assert total == 0.0 and st["carried"][0, 0] == 0
    assert st["requests"][0].tolist() == [3, 4]


def test_rware_return_to_empty_slot():
    seq = [poses((-0.2, -0.3), *PARK), poses((-0.5, 0.0), *PARK), poses((0.6, 0.3), *PARK)]
    _, _, st, _ = run("rware", _rware_state(), seq)
    assert st["carried"][0, 0] == -1 and st["slot_shelf"][0, 6] == 0


def test_rware_events_need_entry():
    # sitting on a slot does not pick up a second time after a return
    seq = [poses((-0.2, -0.3), *PARK)] * 3
    _, _, st, _ = run("rware", _rware_state(), seq)
    assert st["carried"][0, 0] == 0 and st["slot_shelf"][0, 0] == -1


def test_rware_carrying_robot_sees_shelves_as_obstacles():
    cfg = default_config("rware")
    sc = get_scenario("rware")
    st = _rware_state()
    st["carried"][0, 1] = 6
    obs, mask = sc.obstacles(st, cfg, 1)
    assert obs.shape == (1, 8, 3)
    assert mask[0, 1].tolist() == [True] * 6 + [False] * 2
    assert not mask[0, 0].any()


# --- random waypoints -------------------------------------------------------

def test_waypoint_reassigned_on_arrival_only():
    cfg = default_config("random_waypoints")
    sc = get_scenario("random_waypoints")
    p = poses((0.0, 0.0), (0.5, 0.5), (-0.5, 0.5), (0.5, -0.5))
    pts = p[..., :2] + cfg.gains.projection_distance * np.array([1.0, 0.0])
    wp = pts.copy()
    wp[0, 1:] += 0.5
    st, r, m = sc.transition({"waypoints": wp, "reached": np.zeros(1, dtype=np.int64)}, p, None, cfg, KEYS)
    assert r[0] == 0.0 and m["waypoints_reached"][0] == 1
    assert not np.allclose(st["waypoints"][0, 0], wp[0, 0])
    assert np.array_equal(st["waypoints"][0, 1:], wp[0, 1:])
