"""Wire protocol: one JSON object per WebSocket text frame, tagged by "type".

Commands in: handshake, goto, velocity, reset, ping, env_reset, env_step.
Events out: session, state, collision, goal_reached, reset_done, env_result,
pong, error.  All numeric fields must be finite; velocity/action fields are
clamped to the declared bounds on receipt.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

CLIENT_KINDS = ("viewer", "scripted", "rl_agent")


class ProtocolError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass
class Handshake:
    client_kind: str


@dataclass
class Goto:
    position: tuple[float, float, float]
    yaw: float


@dataclass
class Velocity:
    v_fwd: float
    yaw_rate: float


@dataclass
class Reset:
    seed: int
    scenario: str


@dataclass
class Ping:
    pass


@dataclass
class EnvReset:
    seed: int
    scenario: str


@dataclass
class EnvStep:
    action: tuple[float, float]


def _require(doc: dict, key: str) -> Any:
    if key not in doc:
        raise ProtocolError("bad_message", f"missing field {key!r}")
    return doc[key]


def _finite_number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError("bad_message", f"field {name!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ProtocolError("bad_message", f"field {name!r} must be finite")
    return value


def _finite_vec3(value, name: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ProtocolError("bad_message", f"field {name!r} must be [x, y, z]")
    return tuple(_finite_number(v, name) for v in value)


def _seed(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProtocolError("bad_message", "field 'seed' must be an integer")
    if not 0 <= value < 2**64:
        raise ProtocolError("bad_message", "field 'seed' must fit in u64")
    return value


def parse_command(text: str):
    """Parse one inbound frame into a command dataclass."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, RecursionError) as exc:
        raise ProtocolError("bad_json", str(exc)) from exc
    if not isinstance(doc, dict):
        raise ProtocolError("bad_message", "frame must be a JSON object")
    msg_type = doc.get("type")
    if msg_type == "handshake":
        kind = _require(doc, "client_kind")
        if kind not in CLIENT_KINDS:
            raise ProtocolError(
                "bad_message", f"client_kind must be one of {CLIENT_KINDS}"
            )
        return Handshake(kind)
    if msg_type == "goto":
        return Goto(
            _finite_vec3(_require(doc, "position"), "position"),
            _finite_number(_require(doc, "yaw"), "yaw"),
        )
    if msg_type == "velocity":
        return Velocity(
            _finite_number(_require(doc, "v_fwd"), "v_fwd"),
            _finite_number(_require(doc, "yaw_rate"), "yaw_rate"),
        )
    if msg_type == "reset":
        scenario = _require(doc, "scenario")
        if not isinstance(scenario, str):
            raise ProtocolError("bad_message", "field 'scenario' must be a string")
        return Reset(_seed(_require(doc, "seed")), scenario)
    if msg_type == "ping":
        return Ping()
    if msg_type == "env_reset":
        scenario = doc.get("scenario", "vineyard_default")
        if not isinstance(scenario, str):
            raise ProtocolError("bad_message", "field 'scenario' must be a string")
        return EnvReset(_seed(_require(doc, "seed")), scenario)
    if msg_type == "env_step":
        action = _require(doc, "action")
        if not isinstance(action, (list, tuple)) or len(action) != 2:
            raise ProtocolError(
                "bad_message", "field 'action' must be [v_fwd, yaw_rate]"
            )
        return EnvStep(tuple(_finite_number(v, "action") for v in action))
    raise ProtocolError("unknown_type", f"unknown message type {msg_type!r}")


def _clean(value):
    """JSON-safe numbers: inf collapses to a large sentinel-free float? No --
    outgoing messages must be finite by contract; raise if they are not."""
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("outgoing message contains a non-finite number")
    return value


def event(msg_type: str, **fields) -> str:
    def scrub(v):
        if isinstance(v, dict):
            return {k: scrub(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [scrub(x) for x in v]
        if isinstance(v, float):
            return _clean(v)
        return v

    doc = {"type": msg_type}
    doc.update({k: scrub(v) for k, v in fields.items()})
    return json.dumps(doc, allow_nan=False)


def error_event(code: str, detail: str) -> str:
    return event("error", code=code, detail=detail)
