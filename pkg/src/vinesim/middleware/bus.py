"""In-process topic bus with glob subscriptions, plus a TCP fan-out.

Delivery is at-least-once with per-topic FIFO ordering.  Each subscription
owns a bounded queue (default 1024); overflow drops the oldest sample and
counts the drop.  The TCP fan-out forwards every published sample over a
length-prefixed little-endian framing:
(u32 key length, key, u64 timestamp, u32 payload length, payload).
"""

from __future__ import annotations

import fnmatch
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass

from .cdr import ENCAPSULATION_LE


@dataclass(frozen=True)
class TopicSample:
    key: str
    publish_timestamp: int  # ns, monotonic process clock
    payload: bytes


def now_ns() -> int:
    return time.monotonic_ns()


class Subscription:
    def __init__(self, bus: "TopicBus", pattern: str, maxlen: int):
        self._bus = bus
        self.pattern = pattern
        self._queue: deque[TopicSample] = deque()
        self._maxlen = maxlen
        self._cond = threading.Condition()
        self.drops = 0
        self._closed = False

    def _offer(self, sample: TopicSample) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self._maxlen:
                self._queue.popleft()
                self.drops += 1
            self._queue.append(sample)
            self._cond.notify()

    def poll(self, timeout: float | None = None) -> TopicSample | None:
        """Next sample, blocking up to timeout; None on timeout/close."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._queue:
                if self._closed:
                    return None
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return None
                self._cond.wait(remaining)
            return self._queue.popleft()

    def drain(self) -> list[TopicSample]:
        with self._cond:
            out = list(self._queue)
            self._queue.clear()
            return out

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()
        self._bus._remove(self)


class TopicBus:
    def __init__(self, queue_size: int = 1024):
        self._queue_size = queue_size
        self._subs: list[Subscription] = []
        self._lock = threading.Lock()

    def subscribe(self, pattern: str, queue_size: int | None = None) -> Subscription:
        sub = Subscription(self, pattern, queue_size or self._queue_size)
        with self._lock:
            self._subs.append(sub)
        return sub

    def _remove(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, sample: TopicSample) -> None:
        if not sample.key:
            raise ValueError("topic key must be non-empty")
        if sample.payload[:2] != ENCAPSULATION_LE[:2]:
            raise ValueError("payload must begin with the CDR encapsulation header")
        with self._lock:
            subs = [s for s in self._subs if fnmatch.fnmatchcase(sample.key, s.pattern)]
        for s in subs:
            s._offer(sample)


def _frame(sample: TopicSample) -> bytes:
    key = sample.key.encode("utf-8")
    return (
        struct.pack("<I", len(key))
        + key
        + struct.pack("<Q", sample.publish_timestamp)
        + struct.pack("<I", len(sample.payload))
        + sample.payload
    )


def read_frame(reader) -> TopicSample:
    """Read one fan-out frame from a buffered binary reader."""

    def exactly(n: int) -> bytes:
        data = reader.read(n)
        if data is None or len(data) != n:
            raise ConnectionError("fan-out stream closed mid-frame")
        return data

    (key_len,) = struct.unpack("<I", exactly(4))
    key = exactly(key_len).decode("utf-8")
    (stamp,) = struct.unpack("<Q", exactly(8))
    (n,) = struct.unpack("<I", exactly(4))
    return TopicSample(key, stamp, exactly(n))


class TcpFanout:
    """Forwards every sample matching the pattern to connected TCP clients."""

    def __init__(self, bus: TopicBus, host: str = "127.0.0.1", port: int = 0,
                 pattern: str = "*"):
        self._sub = bus.subscribe(pattern, queue_size=4096)
        self._server = socket.create_server((host, port))
        self.address = self._server.getsockname()
        self._clients: list[socket.socket] = []
        self._lock = threading.Lock()
        self._running = True
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._pump_thread = threading.Thread(target=self._pump_loop, daemon=True)
        self._accept_thread.start()
        self._pump_thread.start()

    @property
    def drops(self) -> int:
        return self._sub.drops

    @property
    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def wait_for_clients(self, count: int = 1, timeout: float = 5.0) -> None:
        """Block until `count` clients are registered (publishes made before
        registration are not forwarded to the late client)."""
        deadline = time.monotonic() + timeout
        while self.client_count < count:
            if time.monotonic() > deadline:
                raise TimeoutError("fan-out client did not register in time")
            time.sleep(0.001)

    def _accept_loop(self):
        while self._running:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._lock:
                self._clients.append(conn)

    def _pump_loop(self):
        while self._running:
            sample = self._sub.poll(timeout=0.1)
            if sample is None:
                continue
            data = _frame(sample)
            with self._lock:
                clients = list(self._clients)
            for c in clients:
                try:
                    c.sendall(data)
                except OSError:
                    with self._lock:
                        if c in self._clients:
                            self._clients.remove(c)
                    c.close()

    def close(self):
        self._running = False
        self._sub.close()
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            for c in self._clients:
                c.close()
            self._clients.clear()
        self._accept_thread.join(timeout=1.0)
        self._pump_thread.join(timeout=1.0)
