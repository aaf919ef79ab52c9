"""Batched, deterministic simulation of small unicycle-robot teams.

The usual entry points::

    from botarena import default_config, reset_batch, step_batch

    cfg = default_config("navigation")
    state, obs = reset_batch(cfg, seeds=range(8))
    state, out = step_batch(state, actions, cfg)   # actions: (8, 3) ints in 0..4
"""
from .barriers import BarrierConfig, DegenerateGeometryError, apply_barrier, build_barrier_constraints
from .controllers import (ControllerGains, position_waypoint_controller, si_position_controller, si_to_uni,
                          uni_to_si, unicycle_pose_controller)
from .engine import BatchWorldState, StepOutput, episode_keys, reset_batch, reset_from_keys, scenario_step, step_batch
from .framework import (ConfigError, DiscreteAction, DomainError, HeterogeneitySpec, Scenario, ScenarioConfig,
                        action_to_waypoint, default_config, get_scenario, scenario_names)
from .geometry import SimParams, pairwise_distances, step_unicycle, wrap_angle
from .policies import PolicySpec, act
from .qp import QPInfeasibleError, QPResult, QuadraticProgram, kkt_residual, solve_qp
from .rollout import Rollout, run_batch, run_episodes

__version__ = "0.1.0"

__all__ = [
    "BarrierConfig", "BatchWorldState", "ConfigError", "ControllerGains", "DegenerateGeometryError",
    "DiscreteAction", "DomainError", "HeterogeneitySpec", "PolicySpec", "QPInfeasibleError", "QPResult",
    "QuadraticProgram", "Rollout", "Scenario", "ScenarioConfig", "SimParams", "StepOutput",
    "act", "action_to_waypoint", "apply_barrier", "build_barrier_constraints", "default_config",
    "episode_keys", "get_scenario", "kkt_residual", "pairwise_distances", "position_waypoint_controller",
    "reset_batch", "reset_from_keys", "run_batch", "run_episodes", "scenario_names", "scenario_step",
    "si_position_controller", "si_to_uni", "solve_qp", "step_batch", "step_unicycle", "uni_to_si",
    "unicycle_pose_controller", "wrap_angle",
]
