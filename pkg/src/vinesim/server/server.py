"""WebSocket command server over one SimCore.

Connection handling is concurrent, but every sim-affecting command funnels
through one ordered queue the simulation loop drains at tick boundaries, so
control-mode switches are atomic.  State snapshots flow outward through
per-session bounded outboxes (8192 messages); a full outbox disconnects the
slow consumer rather than stalling the tick.

After an env_reset the loop is step-gated: sim time advances only inside
env_step requests, making the RL path lockstep and reproducible.
"""

from __future__ import annotations

import asyncio
import math
import time

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from ..middleware import (
    TOPIC_CAMERA_DEPTH,
    TOPIC_CAMERA_INFO,
    TOPIC_CAMERA_RGB,
    TOPIC_CAMERA_SEG,
    TOPIC_CLOCK,
    TOPIC_ODOM,
    TOPIC_TF,
    TopicBus,
    TopicSample,
    build_camera_info,
    build_clock,
    build_depth_image,
    build_odometry,
    build_rgb_image,
    build_seg_image,
    build_tf,
    cdr_encode,
    to_stamp,
)
from ..middleware.bus import now_ns
from ..rl_env import NavEnv, RewardConfig, StepAfterDoneError
from ..world import render_frames
from .core import ACTION_BOUNDS, SCENARIOS, ScenarioError, SimCore
from . import protocol
from .protocol import ProtocolError

OUTBOX_LIMIT = 8192
FAST_TICKS_PER_SLICE = 32


class Session:
    _next_id = 0

    def __init__(self, connection):
        Session._next_id += 1
        self.id = f"client-{Session._next_id}"
        self.connection = connection
        self.kind: str | None = None
        self.outbox: asyncio.Queue[str] = asyncio.Queue(maxsize=OUTBOX_LIMIT)
        self.alive = True

    @property
    def identified(self) -> bool:
        return self.kind is not None

    def push(self, text: str) -> None:
        if not self.alive:
            return
        try:
            self.outbox.put_nowait(text)
        except asyncio.QueueFull:
            self.alive = False  # slow consumer: writer task will close


class SimServer:
    def __init__(
        self,
        core: SimCore,
        host: str = "127.0.0.1",
        port: int = 8765,
        broadcast_hz: float = 30.0,
        sensor_hz: float = 30.0,
        realtime: bool = True,
        publish_sensors: bool = False,
        reward: RewardConfig | None = None,
        bus: TopicBus | None = None,
        agent_hz: float = 10.0,
    ):
        self.core = core
        self.host = host
        self.port = port
        self.broadcast_period = 1.0 / broadcast_hz
        self.sensor_period = 1.0 / sensor_hz
        self.realtime = realtime
        self.publish_sensors = publish_sensors
        self.bus = bus or TopicBus()
        self.env = NavEnv(core, reward, agent_hz=agent_hz)
        self.sessions: list[Session] = []
        self.controller: Session | None = None
        self.env_session: Session | None = None
        self._cmd_queue: asyncio.Queue = asyncio.Queue()
        self._server = None
        self._loop_task = None
        self._running = False
        self._next_broadcast = core.state.time
        self._next_sensor = core.state.time
        core.listeners.append(self._on_tick)

    # --- lifecycle -------------------------------------------------------------

    async def start(self):
        self._server = await serve(self._handle_connection, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._running = True
        self._loop_task = asyncio.create_task(self._sim_loop())
        return self

    async def stop(self):
        self._running = False
        if self._loop_task is not None:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass
        for s in list(self.sessions):
            s.alive = False
            try:
                await s.connection.close()
            except ConnectionClosed:
                pass
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    # --- tick observer: broadcasts + sensor topics -------------------------------

    def _on_tick(self, core, events):
        t = core.state.time
        for ev in events:
            if ev[0] == "collision":
                msg = protocol.event(
                    "collision", class_id=int(ev[1]), position=[float(v) for v in ev[2]]
                )
                for s in self.sessions:
                    if s.identified:
                        s.push(msg)
            elif ev[0] == "goal_reached" and self.controller is not None:
                self.controller.push(protocol.event("goal_reached", goto_id=ev[1]))
        if t >= self._next_broadcast - 1e-12:
            self._next_broadcast = t + self.broadcast_period
            self._broadcast_state()
        if self.publish_sensors and t >= self._next_sensor - 1e-12:
            self._next_sensor = t + self.sensor_period
            self._publish_sensor_topics()

    def _broadcast_state(self):
        st = self.core.state
        msg = protocol.event(
            "state",
            time=float(st.time),
            position=[float(v) for v in st.position],
            velocity=[float(v) for v in st.velocity],
            orientation=[float(v) for v in st.orientation],
            angular_velocity=[float(v) for v in st.angular_velocity],
        )
        for s in self.sessions:
            if s.identified:
                s.push(msg)

    def _publish_sensor_topics(self):
        core = self.core
        stamp = to_stamp(core.state.time)
        cam_pos, cam_quat = core.camera_pose(core.rl_camera)
        depth, seg = render_frames(core.scene, cam_pos, cam_quat, core.rl_camera)
        rgb = core.scene.class_color_map()[seg]
        for key, msg in (
            (TOPIC_ODOM, build_odometry(core.state, stamp)),
            (TOPIC_TF, build_tf(core.state, core.rl_camera, stamp)),
            (TOPIC_CAMERA_DEPTH, build_depth_image(depth, stamp)),
            (TOPIC_CAMERA_SEG, build_seg_image(seg, stamp)),
            (TOPIC_CAMERA_RGB, build_rgb_image(rgb, stamp)),
            (TOPIC_CAMERA_INFO, build_camera_info(core.rl_camera, stamp)),
            (TOPIC_CLOCK, build_clock(core.state.time)),
        ):
            self.bus.publish(TopicSample(key, now_ns(), cdr_encode(msg)))

    # --- simulation loop ----------------------------------------------------------

    async def _sim_loop(self):
        wall_anchor = time.monotonic()
        sim_anchor = self.core.state.time
        while self._running:
            while not self._cmd_queue.empty():
                session, cmd = self._cmd_queue.get_nowait()
                self._apply_command(session, cmd)
                if self.env_session is not None:
                    # Step-gated: re-anchor so leaving the gate doesn't burst.
                    wall_anchor = time.monotonic()
                    sim_anchor = self.core.state.time

            if self.env_session is not None:
                await asyncio.sleep(0.001)
                continue

            if self.realtime:
                owed = (time.monotonic() - wall_anchor) - (
                    self.core.state.time - sim_anchor
                )
                ticks = min(int(owed / self.core.dt), 4 * FAST_TICKS_PER_SLICE)
                for _ in range(max(0, ticks)):
                    self.core.tick()
                await asyncio.sleep(self.core.dt)
            else:
                for _ in range(FAST_TICKS_PER_SLICE):
                    self.core.tick()
                await asyncio.sleep(0)

    # --- command handling -----------------------------------------------------------

    def _apply_command(self, session: Session, cmd) -> None:
        try:
            if isinstance(cmd, protocol.Goto):
                try:
                    goto_id = self.core.apply_goto(list(cmd.position), cmd.yaw)
                except ValueError:
                    session.push(protocol.error_event("out_of_bounds", "goto target outside scene bounds"))
                    return
                session.push(protocol.event("goto_accepted", goto_id=goto_id))
            elif isinstance(cmd, protocol.Velocity):
                self.core.apply_velocity(cmd.v_fwd, cmd.yaw_rate)
            elif isinstance(cmd, protocol.Reset):
                try:
                    episode_id = self.core.reset(cmd.seed, cmd.scenario)
                except ScenarioError:
                    session.push(protocol.error_event("unknown_scenario", cmd.scenario))
                    return
                self._next_broadcast = self.core.state.time
                self._next_sensor = self.core.state.time
                session.push(protocol.event("reset_done", episode_id=episode_id))
                self._broadcast_state()
            elif isinstance(cmd, protocol.EnvReset):
                self.env_session = session
                try:
                    obs, info = self.env.reset(cmd.seed, cmd.scenario)
                except (ScenarioError, RuntimeError) as exc:
                    session.push(protocol.error_event("unknown_scenario", str(exc)))
                    return
                session.push(
                    protocol.event(
                        "env_result",
                        obs=[float(v) for v in obs],
                        reward=0.0,
                        terminated=False,
                        truncated=False,
                        info=_sanitize(info),
                    )
                )
            elif isinstance(cmd, protocol.EnvStep):
                if self.env_session is not session:
                    session.push(protocol.error_event("protocol", "env_reset required before env_step"))
                    return
                try:
                    obs, reward, terminated, truncated, info = self.env.step(cmd.action)
                except StepAfterDoneError as exc:
                    session.push(protocol.error_event("protocol", str(exc)))
                    return
                session.push(
                    protocol.event(
                        "env_result",
                        obs=[float(v) for v in obs],
                        reward=float(reward),
                        terminated=terminated,
                        truncated=truncated,
                        info=_sanitize(info),
                    )
                )
        except Exception as exc:  # never let a command kill the loop
            session.push(protocol.error_event("internal", repr(exc)))

    # --- per-connection handling -------------------------------------------------------

    def _session_params(self) -> dict:
        return {
            "state_rate_hz": round(1.0 / self.broadcast_period, 6),
            "agent_interval_s": self.env.ticks_per_step * self.core.dt,
            "v_fwd_bounds": list(ACTION_BOUNDS[0]),
            "yaw_rate_bounds": list(ACTION_BOUNDS[1]),
            "collision_radius": self.core.config.vehicle.collision_radius,
            "observation_length": 35,
            "scenarios": sorted(SCENARIOS),
        }

    async def _handle_connection(self, connection):
        session = Session(connection)
        self.sessions.append(session)
        writer = asyncio.create_task(self._writer(session))
        try:
            await self._reader(session)
        finally:
            session.alive = False
            writer.cancel()
            try:
                await writer
            except asyncio.CancelledError:
                pass
            # Flush queued events (e.g. the error that caused the close).
            try:
                while not session.outbox.empty():
                    await connection.send(session.outbox.get_nowait())
            except ConnectionClosed:
                pass
            if self.controller is session:
                self.controller = None
            if self.env_session is session:
                self.env_session = None
            if session in self.sessions:
                self.sessions.remove(session)

    async def _writer(self, session: Session):
        while True:
            msg = await session.outbox.get()
            try:
                await session.connection.send(msg)
            except ConnectionClosed:
                session.alive = False
                return
            if not session.alive:
                await session.connection.close(code=1008, reason="slow consumer")
                return

    async def _reader(self, session: Session):
        async for raw in session.connection:
            if isinstance(raw, bytes):
                try:
                    raw = raw.decode("utf-8")
                except UnicodeDecodeError:
                    session.push(protocol.error_event("bad_json", "frame is not UTF-8 text"))
                    if not session.identified:
                        break
                    continue
            try:
                cmd = protocol.parse_command(raw)
            except ProtocolError as exc:
                session.push(protocol.error_event(exc.code, exc.detail))
                if not session.identified:
                    break  # protocol rule: handshake must come first
                continue

            if isinstance(cmd, protocol.Handshake):
                if session.identified:
                    session.push(protocol.error_event("already_identified", session.id))
                    continue
                session.kind = cmd.client_kind
                if cmd.client_kind != "viewer" and self.controller is None:
                    self.controller = session
                session.push(
                    protocol.event(
                        "session",
                        client_id=session.id,
                        client_kind=session.kind,
                        control_authority=self.controller is session,
                        **self._session_params(),
                    )
                )
                continue
            if not session.identified:
                # Protocol rule: the handshake must be the first message.
                session.push(
                    protocol.error_event("not_identified", "handshake must be the first message")
                )
                break
            if isinstance(cmd, protocol.Ping):
                session.push(protocol.event("pong"))
                continue
            if self.controller is not session:
                session.push(
                    protocol.error_event("not_authorized", "another client holds control authority")
                )
                continue
            await self._cmd_queue.put((session, cmd))
        # fall through: connection closes when the reader exits


def _sanitize(value):
    """Make info dicts JSON-safe: non-finite floats become None."""
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


async def run_server_forever(server: SimServer):
    await server.start()
    try:
        await asyncio.Future()
    finally:
        await server.stop()
