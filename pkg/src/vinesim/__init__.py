"""Headless multirotor simulator for agricultural inspection, planning, and learning.

Subsystems: coordinate frames (`frames`), rigid-body dynamics (`dynamics`),
trajectory generation and tracking control (`control`), procedural scenes and
raycast sensing (`world`), CDR pub/sub middleware (`middleware`), scripted
missions and trajectory metrics (`missions`), the depth-based navigation MDP
(`rl_env`), the WebSocket command server (`server`), and the CLI (`cli`).
"""

__version__ = "0.1.0"
