"""End-to-end latency probe: build + encode -> bus -> loopback TCP -> decode.

Per tick the probe builds a fresh message, CDR-encodes it, publishes it on
the bus, waits for the TCP fan-out copy, and decodes it; the sample latency
is receive-decode-done minus publish-build-start on the monotonic clock.
Five warmup ticks precede the measured window so n = duration x rate.
"""

from __future__ import annotations

import math
import socket
import time
from dataclasses import dataclass

import numpy as np

from ..dynamics import MultirotorState
from ..frames import quat_identity
from .builders import (
    TOPIC_CAMERA_DEPTH,
    TOPIC_CAMERA_RGB,
    TOPIC_ODOM,
    build_depth_image,
    build_odometry,
    build_rgb_image,
    to_stamp,
)
from .bus import TcpFanout, TopicBus, TopicSample, read_frame
from .messages import Clock, Image, Odometry, Time, cdr_decode, cdr_encode

WARMUP_TICKS = 5


@dataclass
class LatencyStats:
    stream: str
    mean_ms: float
    std_ms: float
    n: int
    drops: int

    def csv_row(self) -> str:
        return f"{self.stream},{self.mean_ms:.4f},{self.std_ms:.4f},{self.n}"


def _static_state(t: float) -> MultirotorState:
    return MultirotorState(
        position=np.array([1.0, -2.0, 3.0]),
        velocity=np.array([0.1, 0.2, -0.05]),
        orientation=quat_identity(),
        angular_velocity=np.array([0.01, 0.0, 0.02]),
        rotor_speeds=np.full(4, 900.0),
        time=t,
    )


class _OdomStream:
    key = TOPIC_ODOM
    schema = Odometry

    def build(self, i: int):
        return build_odometry(_static_state(i / 30.0))


class _DepthStream:
    key = TOPIC_CAMERA_DEPTH
    schema = Image

    def __init__(self, width=640, height=480):
        self._img = np.full((height, width), 5.0, dtype=np.float32)

    def build(self, i: int):
        return build_depth_image(self._img, to_stamp(i / 30.0))


class _RgbStream:
    key = TOPIC_CAMERA_RGB
    schema = Image

    def __init__(self, width=640, height=480):
        self._img = np.zeros((height, width, 3), dtype=np.uint8)

    def build(self, i: int):
        return build_rgb_image(self._img, to_stamp(i / 30.0))


class _NullStream:
    """Header-only payload; the raw transport floor."""

    key = "rt/null"
    schema = Clock

    def build(self, i: int):
        return Clock(Time(i, 0))


STREAM_BUILDERS = {
    "odom": _OdomStream,
    "depth": _DepthStream,
    "rgb": _RgbStream,
    "null": _NullStream,
}


def measure_latency(
    stream: str, duration: float, rate: float, realtime: bool = False
) -> LatencyStats:
    """Measure one stream for duration seconds at rate Hz (n = duration*rate)."""
    if duration <= 0.0 or rate <= 0.0:
        raise ValueError("duration and rate must be positive")
    builder = STREAM_BUILDERS[stream]()
    bus = TopicBus()
    fanout = TcpFanout(bus, pattern=builder.key)
    client = socket.create_connection(fanout.address)
    client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    fanout.wait_for_clients(1)
    reader = client.makefile("rb")

    n_ticks = int(round(duration * rate))
    period = 1.0 / rate
    samples_ns = []
    try:
        start_wall = time.monotonic()
        for i in range(-WARMUP_TICKS, n_ticks):
            if realtime:
                target = start_wall + (i + WARMUP_TICKS) * period
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            t0 = time.monotonic_ns()
            msg = builder.build(max(i, 0))
            payload = cdr_encode(msg)
            bus.publish(TopicSample(builder.key, t0, payload))
            frame = read_frame(reader)
            cdr_decode(frame.payload, builder.schema)
            t1 = time.monotonic_ns()
            if i >= 0:
                samples_ns.append(t1 - t0)
        drops = fanout.drops
    finally:
        reader.close()
        client.close()
        fanout.close()

    arr = np.asarray(samples_ns, dtype=float) / 1e6
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    if not math.isfinite(std):
        std = 0.0
    return LatencyStats(stream, mean, std, len(arr), drops)
