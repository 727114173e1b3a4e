"""Depth-based navigation MDP: observation, reward shaping, step/reset loop.

Observation (35 floats): a 32-bin strip from the centre row of the depth
image (per-bin minimum, clipped to 10 m, normalised to [0, 1], no-hit = 1),
the normalised heading error to the goal in [-1, 1], and normalised forward
velocity / yaw rate in [-1, 1].

Reward: lam * (d_prev - d_curr) - p_step + terminal bonus, where d is the
A* shortest-path distance to the goal over the inflated occupancy grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MultirotorState
from .frames import quat_to_matrix, wrap_to_pi, yaw_of_quat
from .missions import astar_distance, rasterize_scene_to_grid
from .server.core import SimCore
from .world import render_frames

DEPTH_BINS = 32
DEPTH_CLIP_M = 10.0
V_FWD_NORM = 3.0
YAW_RATE_NORM = 1.5


class StepAfterDoneError(RuntimeError):
    """step() was called on a finished episode."""


@dataclass(frozen=True)
class RewardConfig:
    lam: float = 1.0  # progress-term scale
    p_step: float = 0.01
    r_goal: float = 100.0
    r_collision: float = -30.0
    goal_radius: float = 1.5
    max_steps: int = 500

    def __post_init__(self):
        if self.goal_radius <= 0.0:
            raise ValueError("goal_radius must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def depth_strip(depth: np.ndarray) -> np.ndarray:
    """Centre-row strip: 32 per-block minima, clipped and normalised."""
    h, w = depth.shape
    if w % DEPTH_BINS != 0:
        raise ValueError(
            f"depth camera width {w} must be divisible by {DEPTH_BINS}"
        )
    row = depth[h // 2]
    blocks = row.reshape(DEPTH_BINS, w // DEPTH_BINS)
    mins = np.min(blocks, axis=1)  # conservative: nearest return per block
    return np.minimum(mins, DEPTH_CLIP_M) / DEPTH_CLIP_M


def build_observation(depth: np.ndarray, state: MultirotorState, goal) -> np.ndarray:
    goal = np.asarray(goal, dtype=float)
    strip = depth_strip(depth)
    yaw = yaw_of_quat(state.orientation)
    bearing = math.atan2(goal[1] - state.position[1], goal[0] - state.position[0])
    theta_err = wrap_to_pi(bearing - yaw) / math.pi
    fwd = float(quat_to_matrix(state.orientation)[:, 0] @ state.velocity)
    v_norm = min(max(fwd / V_FWD_NORM, -1.0), 1.0)
    w_norm = min(max(float(state.angular_velocity[2]) / YAW_RATE_NORM, -1.0), 1.0)
    return np.concatenate((strip, [theta_err, v_norm, w_norm])).astype(np.float64)


def compute_reward(d_prev: float, d_curr: float, outcome: str, cfg: RewardConfig) -> float:
    """Progress-shaped reward; unreachable distances zero the progress term."""
    if math.isinf(d_prev) or math.isinf(d_curr):
        progress = 0.0
    else:
        progress = cfg.lam * (d_prev - d_curr)
    terminal = {
        "goal": cfg.r_goal,
        "collision": cfg.r_collision,
    }.get(outcome, 0.0)
    return progress - cfg.p_step + terminal


class NavEnv:
    """Step/reset loop over a SimCore; one environment instance per vehicle."""

    RESET_RETRIES = 10

    def __init__(
        self,
        core: SimCore,
        reward: RewardConfig | None = None,
        agent_hz: float = 10.0,
        grid_cell_size: float = 0.5,
    ):
        if core.rl_camera.width % DEPTH_BINS != 0:
            raise ValueError(
                f"rl camera width {core.rl_camera.width} must be divisible by "
                f"{DEPTH_BINS}"
            )
        self.core = core
        self.reward_cfg = reward or RewardConfig()
        self.ticks_per_step = int(round(core.config.physics_hz / agent_hz))
        self.grid_cell_size = grid_cell_size
        self.grid = None
        self.done = True
        self.outcome = "running"
        self.step_count = 0
        self._d_prev = math.inf

    # -- helpers ---------------------------------------------------------------

    def _render_depth(self) -> np.ndarray:
        pos, quat = self.core.camera_pose(self.core.rl_camera)
        depth, _ = render_frames(self.core.scene, pos, quat, self.core.rl_camera)
        return depth

    def _observe(self) -> np.ndarray:
        return build_observation(self._render_depth(), self.core.state, self.core.goal)

    def _astar(self) -> float:
        return astar_distance(self.grid, self.core.state.position, self.core.goal)

    def _goal_distance_xy(self) -> float:
        d = self.core.state.position[:2] - self.core.goal[:2]
        return float(math.hypot(d[0], d[1]))

    # -- API ---------------------------------------------------------------------

    def reset(self, seed: int, scenario: str = "vineyard_default"):
        """Deterministic scene + spawn + goal; retries seeds whose goal is
        unreachable on the inflated grid (up to 10), then errors."""
        last_d = math.inf
        for attempt in range(self.RESET_RETRIES):
            self.core.reset(int(seed) + attempt, scenario)
            self.grid = rasterize_scene_to_grid(
                self.core.scene,
                self.grid_cell_size,
                self.core.config.vehicle.collision_radius,
                self.core.config.hold_altitude,
            )
            last_d = self._astar()
            if math.isfinite(last_d):
                break
        else:
            raise RuntimeError(
                f"goal unreachable for {self.RESET_RETRIES} consecutive seeds"
            )
        self._d_prev = last_d
        self.done = False
        self.outcome = "running"
        self.step_count = 0
        obs = self._observe()
        info = {
            "d0": last_d,
            "episode_id": self.core.episode_id,
            "seed": self.core.seed,
            "goal": self.core.goal.tolist(),
            "spawn": self.core.spawn_position.tolist(),
        }
        return obs, info

    def step(self, action):
        """Hold the clamped action for one agent interval, then observe/score."""
        if self.done:
            raise StepAfterDoneError("episode is finished; call reset()")
        v_applied, w_applied = self.core.apply_velocity(action[0], action[1])
        collision_class = None
        for _ in range(self.ticks_per_step):
            for ev in self.core.tick():
                if ev[0] == "collision" and collision_class is None:
                    collision_class = ev[1]
        self.step_count += 1

        terminated = False
        truncated = False
        if collision_class is not None:
            self.outcome = "collision"
            terminated = True
        elif self._goal_distance_xy() < self.reward_cfg.goal_radius:
            self.outcome = "goal"
            terminated = True
        elif self.step_count >= self.reward_cfg.max_steps:
            self.outcome = "truncated"
            truncated = True

        d_curr = self._astar()
        reward = compute_reward(self._d_prev, d_curr, self.outcome, self.reward_cfg)
        unreachable = math.isinf(self._d_prev) or math.isinf(d_curr)
        self._d_prev = d_curr
        self.done = terminated or truncated

        obs = self._observe()
        info = {
            "outcome": self.outcome,
            "d": d_curr,
            "astar_unreachable": unreachable,
            "applied_action": [v_applied, w_applied],
            "position": self.core.state.position.tolist(),
            "yaw": yaw_of_quat(self.core.state.orientation),
            "goal_distance": self._goal_distance_xy(),
            "collision_class": collision_class,
            "step": self.step_count,
        }
        return obs, reward, terminated, truncated, info
