"""Single-owner simulation core: vehicle, scene, control modes, events.

Exactly one caller advances the core via tick(); everything else reads
immutable snapshots.  Commands switch the control mode atomically at tick
boundaries, so reference setpoints are never mixed within a tick.

Tick pipeline: resolve the active reference (hold pose, trajectory sample,
or velocity-filter integration), run the SE(3) controller and motor mixing,
integrate the dynamics, then evaluate collision (rising edge) and
goal-reached conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..control import (
    FlatOutputRef,
    Se3Gains,
    VelocityFilterConfig,
    allocate_segment_times,
    eval_trajectory,
    hover_ref,
    min_snap_trajectory,
    se3_control,
    velocity_filter_from_state,
    velocity_mode_step,
)
from ..dynamics import VehicleParams, hover_state, motor_mixing, step_dynamics
from ..frames import quat_to_matrix, yaw_of_quat
from ..world import CameraModel, Scene, check_collision, generate_vineyard, single_tree_scene, empty_scene

# Velocity-command bounds: v_fwd in [-2, 3] m/s, yaw_rate in [-1.5, 1.5] rad/s.
ACTION_BOUNDS = ((-2.0, 3.0), (-1.5, 1.5))

VELOCITY_WATCHDOG_S = 0.5
GOAL_POSITION_TOL = 0.1  # m
GOAL_SPEED_TOL = 0.1  # m/s


class ScenarioError(ValueError):
    """Raised for unknown scenario names."""


@dataclass
class ScenarioSpec:
    scene: Scene
    spawn_position: np.ndarray
    spawn_yaw: float
    goal: np.ndarray  # navigation goal (RL task); spawn-relative scenarios


def _vineyard_scenario(seed: int) -> ScenarioSpec:
    rows, trees = 4, 10
    row_spacing, tree_spacing = 3.0, 1.5
    scene = generate_vineyard(rows, trees, row_spacing, tree_spacing, seed)
    rng = np.random.default_rng(np.uint64(seed) + np.uint64(0x9E3779B9))
    corridor = int(rng.integers(0, rows - 1))
    y = (corridor + 0.5) * row_spacing
    spawn = np.array([-2.0, y, HOLD_ALTITUDE])
    goal = np.array([(trees - 1) * tree_spacing + 2.0, y, HOLD_ALTITUDE])
    return ScenarioSpec(scene, spawn, 0.0, goal)


def _single_tree_scenario(seed: int) -> ScenarioSpec:
    scene = single_tree_scene()
    spawn = np.array([-6.0, 0.0, HOLD_ALTITUDE])
    return ScenarioSpec(scene, spawn, 0.0, np.array([6.0, 0.0, HOLD_ALTITUDE]))


def _empty_scenario(seed: int) -> ScenarioSpec:
    scene = empty_scene()
    spawn = np.array([0.0, 0.0, HOLD_ALTITUDE])
    return ScenarioSpec(scene, spawn, 0.0, np.array([20.0, 0.0, HOLD_ALTITUDE]))


HOLD_ALTITUDE = 1.8

SCENARIOS = {
    "vineyard_default": _vineyard_scenario,
    "single_tree": _single_tree_scenario,
    "empty": _empty_scenario,
}


def register_scenario(name: str, builder) -> None:
    """Register a scenario builder: (seed) -> ScenarioSpec."""
    SCENARIOS[name] = builder


@dataclass
class CoreConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: Se3Gains = field(default_factory=Se3Gains)
    velocity_filter: VelocityFilterConfig = field(default_factory=VelocityFilterConfig)
    rl_camera: CameraModel = field(default_factory=CameraModel)
    capture_camera: CameraModel = field(
        default_factory=lambda: CameraModel(width=640, height=480)
    )
    physics_hz: float = 500.0
    goto_speed: float = 1.0  # m/s average for goto trajectories
    hold_altitude: float = HOLD_ALTITUDE


class SimCore:
    def __init__(self, config: CoreConfig | None = None,
                 scenario: str = "vineyard_default", seed: int = 0):
        self.config = config or CoreConfig()
        self.dt = 1.0 / self.config.physics_hz
        self.rl_camera = self.config.rl_camera
        self.capture_camera = self.config.capture_camera
        self.episode_id = 0
        self._goto_counter = 0
        self.tick_count = 0
        # Observers called after every tick with (core, events); the server
        # uses this to schedule broadcasts regardless of who drives ticks.
        self.listeners: list = []
        self.reset(seed, scenario)

    # --- episode / scenario ---------------------------------------------------

    def reset(self, seed: int, scenario: str) -> int:
        builder = SCENARIOS.get(scenario)
        if builder is None:
            raise ScenarioError(f"unknown scenario {scenario!r}")
        spec = builder(int(seed))
        self.scenario_name = scenario
        self.seed = int(seed)
        self.scene = spec.scene
        self.goal = spec.goal
        self.state = hover_state(
            self.config.vehicle, spec.spawn_position, spec.spawn_yaw
        )
        self.spawn_position = spec.spawn_position.copy()
        self.spawn_yaw = spec.spawn_yaw
        self.mode = "idle"
        self._hold = hover_ref(spec.spawn_position, spec.spawn_yaw)
        self._trajectory = None
        self._active_goto_id = None
        self._goal_sent = False
        self._filter = None
        self._cmd_v = 0.0
        self._cmd_w = 0.0
        self._cmd_time = -math.inf
        self._colliding = False
        self.episode_id += 1
        return self.episode_id

    # --- commands ---------------------------------------------------------------

    def apply_goto(self, position, yaw: float) -> int:
        position = np.asarray(position, dtype=float)
        if not self.scene.contains(position):
            raise ValueError("goto target outside scene bounds")
        start = self.state.position.copy()
        start_yaw = yaw_of_quat(self.state.orientation)
        durations = allocate_segment_times([start, position], self.config.goto_speed)
        self._trajectory = min_snap_trajectory(
            [start, position], durations, yaws=[start_yaw, yaw],
            start_time=self.state.time,
        )
        self.mode = "position_yaw"
        self._goto_counter += 1
        self._active_goto_id = self._goto_counter
        self._goal_sent = False
        return self._active_goto_id

    def apply_velocity(self, v_fwd: float, yaw_rate: float) -> tuple[float, float]:
        """Clamp to the action bounds, switch to velocity mode, arm the watchdog."""
        v = min(max(float(v_fwd), ACTION_BOUNDS[0][0]), ACTION_BOUNDS[0][1])
        w = min(max(float(yaw_rate), ACTION_BOUNDS[1][0]), ACTION_BOUNDS[1][1])
        if self.mode != "velocity":
            self.mode = "velocity"
            self._filter = velocity_filter_from_state(
                self.state,
                self.config.hold_altitude,
                yaw_of_quat(self.state.orientation),
            )
        self._cmd_v = v
        self._cmd_w = w
        self._cmd_time = self.state.time
        return v, w

    # --- stepping ---------------------------------------------------------------

    def _reference(self) -> FlatOutputRef:
        if self.mode == "position_yaw" and self._trajectory is not None:
            return eval_trajectory(self._trajectory, self.state.time)
        if self.mode == "velocity" and self._filter is not None:
            v, w = self._cmd_v, self._cmd_w
            if self.state.time - self._cmd_time > VELOCITY_WATCHDOG_S:
                v, w = 0.0, 0.0  # stale command watchdog
            self._filter, ref = velocity_mode_step(
                self._filter, v, w, self.dt, self.config.velocity_filter
            )
            return ref
        return self._hold

    def tick(self) -> list[tuple]:
        """Advance one physics step; returns events:
        ("collision", class_id, position) and ("goal_reached", goto_id)."""
        ref = self._reference()
        thrust, moments = se3_control(
            self.state, ref, self.config.gains, self.config.vehicle
        )
        cmd = motor_mixing(thrust, moments, self.config.vehicle).rotor_speeds
        self.state = step_dynamics(self.state, cmd, self.dt, self.config.vehicle)

        events: list[tuple] = []
        hit, class_id = check_collision(
            self.scene, self.state.position, self.config.vehicle.collision_radius
        )
        if hit and not self._colliding:
            events.append(("collision", class_id, self.state.position.copy()))
        self._colliding = hit

        if (
            self.mode == "position_yaw"
            and self._trajectory is not None
            and not self._goal_sent
        ):
            target = eval_trajectory(self._trajectory, math.inf).position
            err = float(np.linalg.norm(self.state.position - target))
            speed = float(np.linalg.norm(self.state.velocity))
            if err < GOAL_POSITION_TOL and speed < GOAL_SPEED_TOL:
                self._goal_sent = True
                events.append(("goal_reached", self._active_goto_id))

        self.tick_count += 1
        for fn in self.listeners:
            fn(self, events)
        return events

    def run_ticks(self, n: int) -> list[tuple]:
        events = []
        for _ in range(n):
            events.extend(self.tick())
        return events

    @property
    def trajectory_end_time(self) -> float | None:
        if self.mode == "position_yaw" and self._trajectory is not None:
            return self._trajectory.end_time
        return None

    # --- sensing ----------------------------------------------------------------

    def camera_pose(self, model: CameraModel | None = None):
        from ..world import camera_world_pose

        model = model or self.rl_camera
        return camera_world_pose(self.state.position, self.state.orientation, model)

    def body_forward_velocity(self) -> float:
        rot = quat_to_matrix(self.state.orientation)
        return float(rot[:, 0] @ self.state.velocity)

    def is_colliding(self) -> bool:
        return self._colliding
