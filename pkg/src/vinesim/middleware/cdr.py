"""Minimal XCDR1 little-endian reader/writer.

Encapsulation header is the 4 bytes 00 01 00 00 (CDR, little-endian).
Primitive values align to their own size relative to the start of the
serialized body (the offset right after the header).  Strings serialize as
u32 length including the NUL terminator, the bytes, then NUL.  Sequences
serialize as u32 element count followed by the elements.
"""

from __future__ import annotations

import struct

ENCAPSULATION_LE = b"\x00\x01\x00\x00"


class CdrEncodeError(ValueError):
    """Message violates its schema; nothing was encoded."""


class CdrDecodeError(ValueError):
    """Malformed payload; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CdrWriter:
    def __init__(self):
        self.body = bytearray()

    def align(self, size: int) -> None:
        pad = -len(self.body) % size
        if pad:
            self.body += b"\x00" * pad

    def _pack(self, fmt: str, size: int, value) -> None:
        self.align(size)
        self.body += struct.pack(fmt, value)

    def uint8(self, v):
        self.body += struct.pack("<B", v)

    def int8(self, v):
        self.body += struct.pack("<b", v)

    def uint16(self, v):
        self._pack("<H", 2, v)

    def int16(self, v):
        self._pack("<h", 2, v)

    def uint32(self, v):
        self._pack("<I", 4, v)

    def int32(self, v):
        self._pack("<i", 4, v)

    def uint64(self, v):
        self._pack("<Q", 8, v)

    def int64(self, v):
        self._pack("<q", 8, v)

    def float32(self, v):
        self._pack("<f", 4, v)

    def float64(self, v):
        self._pack("<d", 8, v)

    def boolean(self, v):
        self.uint8(1 if v else 0)

    def string(self, s: str) -> None:
        data = s.encode("utf-8")
        self.uint32(len(data) + 1)
        self.body += data
        self.body += b"\x00"

    def float64_array(self, values, expected_len: int | None = None) -> None:
        """Fixed-size f64 array (no length prefix)."""
        values = list(values)
        if expected_len is not None and len(values) != expected_len:
            raise CdrEncodeError(
                f"fixed array needs {expected_len} entries, got {len(values)}"
            )
        self.align(8)
        self.body += struct.pack(f"<{len(values)}d", *values)

    def byte_sequence(self, data: bytes) -> None:
        self.uint32(len(data))
        self.body += data

    def encode(self) -> bytes:
        return ENCAPSULATION_LE + bytes(self.body)


class CdrReader:
    def __init__(self, payload: bytes):
        if len(payload) < 4:
            raise CdrDecodeError("payload shorter than encapsulation header", 0)
        if payload[:2] != ENCAPSULATION_LE[:2]:
            raise CdrDecodeError(
                f"unsupported encapsulation {payload[:2].hex()}", 0
            )
        self.body = memoryview(payload)[4:]
        self.offset = 0

    def align(self, size: int) -> None:
        self.offset += -self.offset % size

    def _take(self, n: int) -> memoryview:
        if self.offset + n > len(self.body):
            raise CdrDecodeError("truncated payload", self.offset + 4)
        out = self.body[self.offset : self.offset + n]
        self.offset += n
        return out

    def _unpack(self, fmt: str, size: int):
        self.align(size)
        return struct.unpack(fmt, self._take(size))[0]

    def uint8(self):
        return self._unpack("<B", 1)

    def int8(self):
        return self._unpack("<b", 1)

    def uint16(self):
        return self._unpack("<H", 2)

    def int16(self):
        return self._unpack("<h", 2)

    def uint32(self):
        return self._unpack("<I", 4)

    def int32(self):
        return self._unpack("<i", 4)

    def uint64(self):
        return self._unpack("<Q", 8)

    def int64(self):
        return self._unpack("<q", 8)

    def float32(self):
        return self._unpack("<f", 4)

    def float64(self):
        return self._unpack("<d", 8)

    def boolean(self):
        return bool(self.uint8())

    def string(self) -> str:
        n = self.uint32()
        if n == 0:
            raise CdrDecodeError("string length 0 (missing NUL)", self.offset + 4)
        raw = bytes(self._take(n))
        if raw[-1:] != b"\x00":
            raise CdrDecodeError("string is not NUL-terminated", self.offset + 4)
        return raw[:-1].decode("utf-8")

    def float64_array(self, count: int) -> tuple:
        self.align(8)
        return struct.unpack(f"<{count}d", self._take(8 * count))

    def byte_sequence(self) -> bytes:
        n = self.uint32()
        return bytes(self._take(n))

    def finish(self) -> None:
        """Reject payloads with more than alignment padding left over."""
        rest = self.body[self.offset :]
        if len(rest) > 3 or any(rest):
            raise CdrDecodeError(
                f"misaligned residue of {len(rest)} byte(s)", self.offset + 4
            )
