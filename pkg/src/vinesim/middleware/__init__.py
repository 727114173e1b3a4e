"""ROS 2-compatible CDR serialization, in-process pub/sub, and latency probe."""

from .bus import Subscription, TcpFanout, TopicBus, TopicSample, read_frame
from .cdr import CdrDecodeError, CdrEncodeError, CdrReader, CdrWriter
from .latency import LatencyStats, STREAM_BUILDERS, measure_latency
from .messages import (
    CameraInfo,
    Clock,
    Header,
    Image,
    Odometry,
    Pose,
    PoseWithCovariance,
    Quaternion,
    RegionOfInterest,
    TFMessage,
    Time,
    Transform,
    TransformStamped,
    Twist,
    TwistWithCovariance,
    Vector3,
    cdr_decode,
    cdr_encode,
)
from .builders import (
    TOPIC_CAMERA_DEPTH,
    TOPIC_CAMERA_INFO,
    TOPIC_CAMERA_RGB,
    TOPIC_CAMERA_SEG,
    TOPIC_CLOCK,
    TOPIC_ODOM,
    TOPIC_TF,
    build_camera_info,
    build_clock,
    build_depth_image,
    build_odometry,
    build_rgb_image,
    build_seg_image,
    build_tf,
    to_stamp,
)

__all__ = [
    "CameraInfo", "CdrDecodeError", "CdrEncodeError", "CdrReader", "CdrWriter",
    "Clock", "Header", "Image", "LatencyStats", "Odometry", "Pose",
    "PoseWithCovariance", "Quaternion", "RegionOfInterest", "STREAM_BUILDERS",
    "Subscription", "TFMessage", "TcpFanout", "Time", "TopicBus", "TopicSample",
    "Transform", "TransformStamped", "Twist", "TwistWithCovariance", "Vector3",
    "build_camera_info", "build_clock", "build_depth_image", "build_odometry",
    "build_rgb_image", "build_seg_image", "build_tf", "cdr_decode", "cdr_encode",
    "measure_latency", "read_frame", "to_stamp",
    "TOPIC_CAMERA_DEPTH", "TOPIC_CAMERA_INFO", "TOPIC_CAMERA_RGB",
    "TOPIC_CAMERA_SEG", "TOPIC_CLOCK", "TOPIC_ODOM", "TOPIC_TF",
]
