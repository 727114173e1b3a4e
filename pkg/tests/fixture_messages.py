"""Canonical message instances shared by the golden-fixture generator and tests."""

import numpy as np

from vinesim.dynamics import MultirotorState
from vinesim.frames import quat_from_yaw
from vinesim.middleware import (
    build_camera_info,
    build_depth_image,
    build_odometry,
    build_tf,
    to_stamp,
)
from vinesim.world import CameraModel

CANONICAL_STATE = MultirotorState(
    position=np.array([1.5, -2.25, 3.0]),
    velocity=np.array([0.5, -0.25, 0.125]),
    orientation=quat_from_yaw(0.5),
    angular_velocity=np.array([0.03125, -0.0625, 0.25]),
    rotor_speeds=np.full(4, 900.0),
    time=12.25,
)

CANONICAL_CAMERA = CameraModel(width=320, height=240)


def canonical_odometry():
    return build_odometry(CANONICAL_STATE)


def canonical_image():
    depth = np.array([[1.5, np.inf], [0.25, 2.0]], dtype=np.float32)
    return build_depth_image(depth, to_stamp(12.25))


def canonical_camera_info():
    return build_camera_info(CANONICAL_CAMERA, to_stamp(12.25))


def canonical_tf():
    return build_tf(CANONICAL_STATE, CANONICAL_CAMERA)
