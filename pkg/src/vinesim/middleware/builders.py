"""Builders turning simulator state and sensor arrays into message instances."""

from __future__ import annotations

import numpy as np

from ..dynamics import MultirotorState
from ..frames import FrameId, quat_to_matrix
from ..world import CameraModel
from .messages import (
    CameraInfo,
    Clock,
    Header,
    Image,
    Odometry,
    Pose,
    PoseWithCovariance,
    Quaternion,
    TFMessage,
    Time,
    Transform,
    TransformStamped,
    Twist,
    TwistWithCovariance,
    Vector3,
)

TOPIC_ODOM = "rt/odom"
TOPIC_TF = "rt/tf"
TOPIC_CAMERA_DEPTH = "rt/camera/depth"
TOPIC_CAMERA_SEG = "rt/camera/seg"
TOPIC_CAMERA_RGB = "rt/camera/rgb"
TOPIC_CAMERA_INFO = "rt/camera/camera_info"
TOPIC_CLOCK = "rt/clock"


def to_stamp(t: float) -> Time:
    sec = int(t)
    nanosec = int(round((t - sec) * 1e9))
    if nanosec >= 1_000_000_000:
        sec += 1
        nanosec -= 1_000_000_000
    return Time(sec, nanosec)


def _quat_msg(q) -> Quaternion:
    w, x, y, z = (float(v) for v in q)
    return Quaternion(x, y, z, w)


def _vec_msg(v) -> Vector3:
    return Vector3(float(v[0]), float(v[1]), float(v[2]))


def build_odometry(state: MultirotorState, stamp: Time | None = None) -> Odometry:
    """Ground-truth odometry: pose in the Z-up world, twist in the body frame."""
    stamp = stamp or to_stamp(state.time)
    rot = quat_to_matrix(state.orientation)
    body_vel = rot.T @ state.velocity
    return Odometry(
        header=Header(stamp, FrameId.WORLD_ZUP.value),
        child_frame_id=FrameId.BODY.value,
        pose=PoseWithCovariance(
            Pose(_vec_msg(state.position), _quat_msg(state.orientation))
        ),
        twist=TwistWithCovariance(
            Twist(_vec_msg(body_vel), _vec_msg(state.angular_velocity))
        ),
    )


def build_depth_image(depth: np.ndarray, stamp: Time) -> Image:
    """32FC1 image; no-hit pixels carry +inf."""
    h, w = depth.shape
    data = np.ascontiguousarray(depth, dtype="<f4").tobytes()
    return Image(Header(stamp, FrameId.CAMERA.value), h, w, "32FC1", 0, w * 4, data)


def build_seg_image(seg: np.ndarray, stamp: Time) -> Image:
    h, w = seg.shape
    data = np.ascontiguousarray(seg, dtype="<u2").tobytes()
    return Image(Header(stamp, FrameId.CAMERA.value), h, w, "mono16", 0, w * 2, data)


def build_rgb_image(rgb: np.ndarray, stamp: Time) -> Image:
    h, w, _ = rgb.shape
    data = np.ascontiguousarray(rgb, dtype=np.uint8).tobytes()
    return Image(Header(stamp, FrameId.CAMERA.value), h, w, "rgb8", 0, w * 3, data)


def build_camera_info(model: CameraModel, stamp: Time) -> CameraInfo:
    fx, fy, cx, cy = model.fx, model.fy, model.cx, model.cy
    return CameraInfo(
        header=Header(stamp, FrameId.CAMERA.value),
        height=model.height,
        width=model.width,
        distortion_model="plumb_bob",
        d=(0.0,) * 5,
        k=(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0),
        r=(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        p=(fx, 0.0, cx, 0.0, 0.0, fy, cy, 0.0, 0.0, 0.0, 1.0, 0.0),
    )


def build_tf(state: MultirotorState, model: CameraModel, stamp: Time | None = None) -> TFMessage:
    """World->body and body->camera transforms."""
    stamp = stamp or to_stamp(state.time)
    world_body = TransformStamped(
        Header(stamp, FrameId.WORLD_ZUP.value),
        FrameId.BODY.value,
        Transform(_vec_msg(state.position), _quat_msg(state.orientation)),
    )
    body_cam = TransformStamped(
        Header(stamp, FrameId.BODY.value),
        FrameId.CAMERA.value,
        Transform(
            _vec_msg(model.body_to_camera_pos), _quat_msg(model.body_to_camera_quat)
        ),
    )
    return TFMessage([world_body, body_cam])


def build_clock(t: float) -> Clock:
    return Clock(to_stamp(t))
