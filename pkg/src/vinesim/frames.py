"""Coordinate frames and quaternion helpers.

Two world frames exist: the dynamics frame (right-handed, Z-up, X-forward)
and the render frame (right-handed, Y-up, -Z-forward).  All dynamics,
control, and task logic runs in the Z-up frame; the Y-up conversion is
applied only at the render/sensor boundary.  The fixed axis map is
(x, y, z) -> (-y, z, -x), the unique proper rotation sending Z-up to Y-up
and X-forward to -Z-forward with a right-handed result.

Quaternions are length-4 arrays [w, x, y, z], scalar first, and rotate body
vectors into the world frame: v_world = R(q) @ v_body.  Yaw is measured in
the Z-up frame, about +Z.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

ZUP_TO_YUP_MAT = np.array(
    [
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
    ]
)
YUP_TO_ZUP_MAT = ZUP_TO_YUP_MAT.T


class FrameId(Enum):
    """Frames a pose-bearing message may be expressed in."""

    WORLD_ZUP = "world"
    WORLD_YUP = "world_yup"
    BODY = "base_link"
    CAMERA = "camera"


class FrameError(ValueError):
    """Raised for invalid frame-conversion inputs (e.g. non-unit quaternions)."""


def zup_to_yup(v) -> np.ndarray:
    """Map a vector from the Z-up world frame to the Y-up render frame."""
    return ZUP_TO_YUP_MAT @ np.asarray(v, dtype=float)


def yup_to_zup(v) -> np.ndarray:
    """Exact inverse of :func:`zup_to_yup`."""
    return YUP_TO_ZUP_MAT @ np.asarray(v, dtype=float)


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if n < 1e-12:
        raise FrameError("cannot normalize near-zero quaternion")
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product a (x) b, both [w, x, y, z]."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (body -> world for attitude)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's method, w >= 0)."""
    m = np.asarray(m, dtype=float)
    t = m[0, 0] + m[1, 1] + m[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0.0:
        q = -q
    return quat_normalize(q)


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    qv = np.array([0.0, *v])
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[1:]


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / math.sqrt(float(axis @ axis))
    half = 0.5 * angle
    return np.array([math.cos(half), *(math.sin(half) * axis)])


def quat_from_yaw(yaw: float) -> np.ndarray:
    """Quaternion of a pure yaw about +Z (Z-up frame)."""
    return np.array([math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)])


def yaw_of_quat(q) -> float:
    """Yaw (about +Z, Z-up frame) of the body x-axis projected to the XY plane."""
    fwd = quat_to_matrix(q)[:, 0]
    return math.atan2(fwd[1], fwd[0])


def quat_angle_between(a, b) -> float:
    """Geodesic rotation angle between two unit quaternions, in [0, pi]."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * math.acos(min(1.0, d))


def wrap_to_pi(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


# Quaternion of the Z-up -> Y-up axis map, computed from the matrix so the
# two representations cannot drift apart.
FRAME_CHANGE_QUAT = matrix_to_quat(ZUP_TO_YUP_MAT)


def rotate_quaternion_frame(q, direction: str = "zup_to_yup") -> np.ndarray:
    """Conjugate an attitude quaternion by the fixed frame-change rotation.

    The result satisfies, for all vectors v:
    zup_to_yup(rotate(q, v)) == rotate(rotate_quaternion_frame(q), zup_to_yup(v)).
    Input must be unit-norm within 1e-6.
    """
    q = np.asarray(q, dtype=float)
    if abs(math.sqrt(float(q @ q)) - 1.0) > 1e-6:
        raise FrameError("quaternion is not unit-norm")
    if direction == "zup_to_yup":
        fc = FRAME_CHANGE_QUAT
    elif direction == "yup_to_zup":
        fc = quat_conjugate(FRAME_CHANGE_QUAT)
    else:
        raise FrameError(f"unknown frame-change direction: {direction!r}")
    out = quat_multiply(quat_multiply(fc, q), quat_conjugate(fc))
    return quat_normalize(out)
