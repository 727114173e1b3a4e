"""Minimal stand-in for the Gymnasium API, used only when gymnasium is not
installed (e.g. offline environments).  Covers exactly what RemoteNavEnv and
the bundled SAC loop need: Env, spaces.Box, and seeding."""

from __future__ import annotations

import numpy as np


class Box:
    def __init__(self, low, high, shape=None, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self.low = np.broadcast_to(np.asarray(low, dtype=self.dtype), shape).copy() \
            if shape else np.asarray(low, dtype=self.dtype)
        self.high = np.broadcast_to(np.asarray(high, dtype=self.dtype), shape).copy() \
            if shape else np.asarray(high, dtype=self.dtype)
        self.shape = self.low.shape
        self._rng = np.random.default_rng()

    def seed(self, seed=None):
        self._rng = np.random.default_rng(seed)
        return [seed]

    def sample(self):
        return self._rng.uniform(self.low, self.high).astype(self.dtype)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return (
            x.shape == self.shape
            and bool(np.all(x >= self.low - 1e-6))
            and bool(np.all(x <= self.high + 1e-6))
        )

    def __repr__(self):
        return f"Box(shape={self.shape}, dtype={self.dtype})"


class _Spaces:
    Box = Box


spaces = _Spaces()


class Env:
    metadata: dict = {}
    observation_space = None
    action_space = None

    _np_random = None

    @property
    def np_random(self):
        if self._np_random is None:
            self._np_random = np.random.default_rng()
        return self._np_random

    def reset(self, *, seed=None, options=None):
        if seed is not None:
            self._np_random = np.random.default_rng(seed)
        return None, {}

    def step(self, action):
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
