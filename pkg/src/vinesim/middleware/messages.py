"""Message schemas mirroring the standard ROS 2 definitions, with CDR codecs.

Field order and nesting follow builtin_interfaces, std_msgs, geometry_msgs,
nav_msgs, sensor_msgs, tf2_msgs, and rosgraph_msgs so the payloads are
byte-compatible with common RMW serializations (XCDR1 little-endian).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cdr import CdrDecodeError, CdrEncodeError, CdrReader, CdrWriter

_BYTES_PER_PIXEL = {"32FC1": 4, "mono16": 2, "rgb8": 3, "mono8": 1}


@dataclass
class Time:
    sec: int
    nanosec: int

    def _encode(self, w: CdrWriter):
        w.int32(self.sec)
        w.uint32(self.nanosec)

    @staticmethod
    def _decode(r: CdrReader) -> "Time":
        return Time(r.int32(), r.uint32())


@dataclass
class Header:
    stamp: Time
    frame_id: str

    def _encode(self, w: CdrWriter):
        self.stamp._encode(w)
        w.string(self.frame_id)

    @staticmethod
    def _decode(r: CdrReader) -> "Header":
        return Header(Time._decode(r), r.string())


@dataclass
class Vector3:
    x: float
    y: float
    z: float

    def _encode(self, w: CdrWriter):
        w.float64(self.x)
        w.float64(self.y)
        w.float64(self.z)

    @staticmethod
    def _decode(r: CdrReader) -> "Vector3":
        return Vector3(r.float64(), r.float64(), r.float64())


Point = Vector3  # identical layout


@dataclass
class Quaternion:
    x: float
    y: float
    z: float
    w: float

    def _encode(self, wr: CdrWriter):
        wr.float64(self.x)
        wr.float64(self.y)
        wr.float64(self.z)
        wr.float64(self.w)

    @staticmethod
    def _decode(r: CdrReader) -> "Quaternion":
        return Quaternion(r.float64(), r.float64(), r.float64(), r.float64())


@dataclass
class Pose:
    position: Vector3
    orientation: Quaternion

    def _encode(self, w: CdrWriter):
        self.position._encode(w)
        self.orientation._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "Pose":
        return Pose(Vector3._decode(r), Quaternion._decode(r))


@dataclass
class PoseWithCovariance:
    pose: Pose
    covariance: tuple = field(default_factory=lambda: (0.0,) * 36)

    def _encode(self, w: CdrWriter):
        if len(self.covariance) != 36:
            raise CdrEncodeError("pose covariance must have exactly 36 entries")
        self.pose._encode(w)
        w.float64_array(self.covariance, 36)

    @staticmethod
    def _decode(r: CdrReader) -> "PoseWithCovariance":
        return PoseWithCovariance(Pose._decode(r), r.float64_array(36))


@dataclass
class Twist:
    linear: Vector3
    angular: Vector3

    def _encode(self, w: CdrWriter):
        self.linear._encode(w)
        self.angular._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "Twist":
        return Twist(Vector3._decode(r), Vector3._decode(r))


@dataclass
class TwistWithCovariance:
    twist: Twist
    covariance: tuple = field(default_factory=lambda: (0.0,) * 36)

    def _encode(self, w: CdrWriter):
        if len(self.covariance) != 36:
            raise CdrEncodeError("twist covariance must have exactly 36 entries")
        self.twist._encode(w)
        w.float64_array(self.covariance, 36)

    @staticmethod
    def _decode(r: CdrReader) -> "TwistWithCovariance":
        return TwistWithCovariance(Twist._decode(r), r.float64_array(36))


@dataclass
class Odometry:
    header: Header
    child_frame_id: str
    pose: PoseWithCovariance
    twist: TwistWithCovariance

    def _encode(self, w: CdrWriter):
        self.header._encode(w)
        w.string(self.child_frame_id)
        self.pose._encode(w)
        self.twist._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "Odometry":
        return Odometry(
            Header._decode(r),
            r.string(),
            PoseWithCovariance._decode(r),
            TwistWithCovariance._decode(r),
        )


@dataclass
class Image:
    header: Header
    height: int
    width: int
    encoding: str
    is_bigendian: int
    step: int
    data: bytes

    def _validate(self):
        bpp = _BYTES_PER_PIXEL.get(self.encoding)
        if bpp is None:
            raise CdrEncodeError(f"unsupported image encoding {self.encoding!r}")
        if self.step != self.width * bpp:
            raise CdrEncodeError(
                f"image step {self.step} != width {self.width} x {bpp} bytes/px"
            )
        if len(self.data) != self.step * self.height:
            raise CdrEncodeError(
                f"image data length {len(self.data)} != step x height"
            )

    def _encode(self, w: CdrWriter):
        self._validate()
        self.header._encode(w)
        w.uint32(self.height)
        w.uint32(self.width)
        w.string(self.encoding)
        w.uint8(self.is_bigendian)
        w.uint32(self.step)
        w.byte_sequence(self.data)

    @staticmethod
    def _decode(r: CdrReader) -> "Image":
        return Image(
            Header._decode(r),
            r.uint32(),
            r.uint32(),
            r.string(),
            r.uint8(),
            r.uint32(),
            r.byte_sequence(),
        )


@dataclass
class RegionOfInterest:
    x_offset: int = 0
    y_offset: int = 0
    height: int = 0
    width: int = 0
    do_rectify: bool = False

    def _encode(self, w: CdrWriter):
        w.uint32(self.x_offset)
        w.uint32(self.y_offset)
        w.uint32(self.height)
        w.uint32(self.width)
        w.boolean(self.do_rectify)

    @staticmethod
    def _decode(r: CdrReader) -> "RegionOfInterest":
        return RegionOfInterest(
            r.uint32(), r.uint32(), r.uint32(), r.uint32(), r.boolean()
        )


@dataclass
class CameraInfo:
    header: Header
    height: int
    width: int
    distortion_model: str
    d: tuple
    k: tuple  # 9 entries, row-major 3x3
    r: tuple  # 9 entries
    p: tuple  # 12 entries, row-major 3x4
    binning_x: int = 0
    binning_y: int = 0
    roi: RegionOfInterest = field(default_factory=RegionOfInterest)

    def _encode(self, w: CdrWriter):
        if len(self.k) != 9 or len(self.r) != 9 or len(self.p) != 12:
            raise CdrEncodeError("camera matrices must be 9/9/12 entries")
        self.header._encode(w)
        w.uint32(self.height)
        w.uint32(self.width)
        w.string(self.distortion_model)
        w.uint32(len(self.d))
        w.float64_array(self.d)
        w.float64_array(self.k, 9)
        w.float64_array(self.r, 9)
        w.float64_array(self.p, 12)
        w.uint32(self.binning_x)
        w.uint32(self.binning_y)
        self.roi._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "CameraInfo":
        header = Header._decode(r)
        height = r.uint32()
        width = r.uint32()
        model = r.string()
        nd = r.uint32()
        return CameraInfo(
            header,
            height,
            width,
            model,
            r.float64_array(nd),
            r.float64_array(9),
            r.float64_array(9),
            r.float64_array(12),
            r.uint32(),
            r.uint32(),
            RegionOfInterest._decode(r),
        )


@dataclass
class Transform:
    translation: Vector3
    rotation: Quaternion

    def _encode(self, w: CdrWriter):
        self.translation._encode(w)
        self.rotation._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "Transform":
        return Transform(Vector3._decode(r), Quaternion._decode(r))


@dataclass
class TransformStamped:
    header: Header
    child_frame_id: str
    transform: Transform

    def _encode(self, w: CdrWriter):
        self.header._encode(w)
        w.string(self.child_frame_id)
        self.transform._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "TransformStamped":
        return TransformStamped(Header._decode(r), r.string(), Transform._decode(r))


@dataclass
class TFMessage:
    transforms: list

    def _encode(self, w: CdrWriter):
        w.uint32(len(self.transforms))
        for t in self.transforms:
            t._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "TFMessage":
        n = r.uint32()
        if n > 1_000_000:
            raise CdrDecodeError(f"implausible transform count {n}", r.offset + 4)
        return TFMessage([TransformStamped._decode(r) for _ in range(n)])


@dataclass
class Clock:
    clock: Time

    def _encode(self, w: CdrWriter):
        self.clock._encode(w)

    @staticmethod
    def _decode(r: CdrReader) -> "Clock":
        return Clock(Time._decode(r))


SCHEMAS = (Time, Header, Odometry, Image, CameraInfo, TFMessage, Clock)


def cdr_encode(message) -> bytes:
    """Serialize a message instance to CDR bytes (with encapsulation header)."""
    w = CdrWriter()
    message._encode(w)
    return w.encode()


def cdr_decode(payload: bytes, schema):
    """Decode payload bytes as the given schema; exact inverse of cdr_encode."""
    r = CdrReader(payload)
    msg = schema._decode(r)
    r.finish()
    return msg
