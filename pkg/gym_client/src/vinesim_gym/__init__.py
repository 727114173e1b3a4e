"""Gymnasium-compatible client for the vinesim WebSocket episode service."""

from .client import ProtocolViolation, SimClient, launch_local_server
from .env import RemoteEnvConfig, RemoteNavEnv

__all__ = [
    "ProtocolViolation",
    "RemoteEnvConfig",
    "RemoteNavEnv",
    "SimClient",
    "launch_local_server",
]

__version__ = "0.1.0"
