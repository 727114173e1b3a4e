"""Gymnasium environment backed by the simulator's WebSocket episode service.

Observation and action spaces are built from the handshake-advertised
bounds, so the client can never drift from the server contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import gymnasium as gym
    from gymnasium import spaces
except ImportError:  # pragma: no cover - exercised only without gymnasium
    from . import _gym_compat as gym
    from ._gym_compat import spaces

from .client import SimClient


@dataclass
class RemoteEnvConfig:
    uri: str = "ws://127.0.0.1:8765/sim"
    scenario: str = "vineyard_default"
    seed: int = 0
    timeout: float = 60.0

    def __post_init__(self):
        if self.timeout <= 0.0:
            raise ValueError("timeout must be positive")


class RemoteNavEnv(gym.Env):
    """One WebSocket connection per environment instance, request/reply per step."""

    metadata = {"render_modes": []}

    def __init__(self, config: RemoteEnvConfig | None = None, **kwargs):
        self.config = config or RemoteEnvConfig(**kwargs)
        self.client = SimClient(self.config.uri, timeout=self.config.timeout)
        session = self.client.handshake("rl_agent")

        n_obs = int(session["observation_length"])
        n_depth = n_obs - 3
        low = np.concatenate([np.zeros(n_depth), -np.ones(3)]).astype(np.float32)
        high = np.ones(n_obs, dtype=np.float32)
        self.observation_space = spaces.Box(low=low, high=high, dtype=np.float32)
        v_lo, v_hi = session["v_fwd_bounds"]
        w_lo, w_hi = session["yaw_rate_bounds"]
        self.action_space = spaces.Box(
            low=np.array([v_lo, w_lo], dtype=np.float32),
            high=np.array([v_hi, w_hi], dtype=np.float32),
            dtype=np.float32,
        )
        self._episode_seed = int(self.config.seed)

    def _obs(self, doc) -> np.ndarray:
        return np.asarray(doc["obs"], dtype=np.float32)

    def reset(self, *, seed=None, options=None):
        super().reset(seed=seed)
        if seed is not None:
            self._episode_seed = int(seed)
        scenario = (options or {}).get("scenario", self.config.scenario)
        doc = self.client.env_reset(self._episode_seed, scenario)
        self._episode_seed += 1  # distinct episodes unless reseeded
        return self._obs(doc), dict(doc["info"])

    def step(self, action):
        doc = self.client.env_step(np.asarray(action, dtype=float))
        return (
            self._obs(doc),
            float(doc["reward"]),
            bool(doc["terminated"]),
            bool(doc["truncated"]),
            dict(doc["info"]),
        )

    def close(self):
        self.client.close()
