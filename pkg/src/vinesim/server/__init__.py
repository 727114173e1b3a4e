"""Simulation core and the WebSocket command server."""

from .core import ACTION_BOUNDS, CoreConfig, SimCore

__all__ = ["ACTION_BOUNDS", "CoreConfig", "SimCore"]
