"""Synchronous WebSocket client for the simulator protocol.

Contains no physics or reward logic: the server is authoritative, this side
only serializes commands and awaits the matching reply, skipping broadcast
events (state/collision/goal_reached) that interleave with replies.
"""

from __future__ import annotations

import json
import socket
import subprocess
import sys
import time

from websockets.sync.client import connect


class ProtocolViolation(RuntimeError):
    """Unexpected server reply; carries the error code when there is one."""

    def __init__(self, detail: str, code: str | None = None):
        super().__init__(detail if code is None else f"{code}: {detail}")
        self.code = code


BROADCAST_TYPES = ("state", "collision", "goal_reached", "goto_accepted")


class SimClient:
    def __init__(self, uri: str, timeout: float = 30.0):
        if timeout <= 0.0:
            raise ValueError("timeout must be positive")
        self.uri = uri
        self.timeout = timeout
        self._ws = connect(uri, open_timeout=timeout, max_size=2**23)
        self.session: dict | None = None

    def handshake(self, client_kind: str = "rl_agent") -> dict:
        self._send({"type": "handshake", "client_kind": client_kind})
        self.session = self._await("session")
        return self.session

    def env_reset(self, seed: int, scenario: str = "vineyard_default") -> dict:
        self._send({"type": "env_reset", "seed": int(seed), "scenario": scenario})
        return self._await("env_result")

    def env_step(self, action) -> dict:
        self._send({"type": "env_step", "action": [float(action[0]), float(action[1])]})
        return self._await("env_result")

    def ping(self) -> None:
        self._send({"type": "ping"})
        self._await("pong")

    def close(self) -> None:
        try:
            self._ws.close()
        except OSError:
            pass

    def _send(self, doc: dict) -> None:
        self._ws.send(json.dumps(doc))

    def _await(self, reply_type: str) -> dict:
        deadline = time.monotonic() + self.timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"no {reply_type!r} reply within {self.timeout} s")
            raw = self._ws.recv(timeout=remaining)
            doc = json.loads(raw)
            msg_type = doc.get("type")
            if msg_type == reply_type:
                return doc
            if msg_type == "error":
                raise ProtocolViolation(doc.get("detail", ""), doc.get("code"))
            if msg_type not in BROADCAST_TYPES:
                raise ProtocolViolation(f"unexpected message type {msg_type!r}")


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def launch_local_server(
    scenario: str = "vineyard_default",
    seed: int = 0,
    extra_args: tuple = ("--fast", "--no-sensors"),
    startup_timeout: float = 30.0,
):
    """Spawn `vinesim serve` as a subprocess; returns (process, uri).

    The caller owns the process (terminate() when done).
    """
    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "vinesim.cli", "serve",
            "--port", str(port), "--scenario", scenario, "--seed", str(seed),
            *extra_args,
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    deadline = time.monotonic() + startup_timeout
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if "serving" in line:
            return proc, f"ws://127.0.0.1:{port}/sim"
        if proc.poll() is not None:
            break
    err = proc.stderr.read() if proc.poll() is not None else ""
    proc.kill()
    raise RuntimeError(f"simulator did not start: {err.strip()}")
