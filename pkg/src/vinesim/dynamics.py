"""Quadrotor rigid-body dynamics with first-order motor lag.

X-configuration quad in the Z-up world frame (body: x forward, y left,
z up).  Rotor layout, CCW positive about +z:

    0: front-right, CCW      2: front-left,  CW
    1: back-left,   CCW      3: back-right,  CW

Thrust of rotor i is k_f * w_i^2 along body z; its reaction yaw torque is
-k_m * w_i^2 for CCW rotors and +k_m * w_i^2 for CW rotors.  Newton-Euler
equations with linear drag are integrated with classical RK4; the attitude
quaternion is renormalised after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .frames import quat_from_yaw, quat_normalize


class DynamicsError(RuntimeError):
    """Raised when a step produces a non-finite derivative; names the field."""


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 0.8
    inertia_diag: tuple[float, float, float] = (5e-3, 5e-3, 8e-3)
    arm_length: float = 0.17
    thrust_coeff: float = 2.3e-6
    moment_coeff: float = 4.0e-8
    rotor_speed_max: float = 1500.0
    motor_time_constant: float = 0.05
    collision_radius: float = 0.3
    gravity: float = 9.81
    drag_coeff: float = 0.1

    def __post_init__(self):
        for name in (
            "mass",
            "arm_length",
            "thrust_coeff",
            "moment_coeff",
            "rotor_speed_max",
            "motor_time_constant",
            "collision_radius",
            "gravity",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"vehicle parameter {name} must be strictly positive")
        if any(j <= 0.0 for j in self.inertia_diag):
            raise ValueError("vehicle parameter inertia_diag must be strictly positive")
        if self.drag_coeff < 0.0:
            raise ValueError("vehicle parameter drag_coeff must be non-negative")
        if self.rotor_speed_max <= self.hover_rotor_speed():
            raise ValueError("rotor_speed_max does not allow hover")

    def hover_rotor_speed(self) -> float:
        """Rotor speed at which four rotors exactly carry the weight."""
        return math.sqrt(self.mass * self.gravity / (4.0 * self.thrust_coeff))

    def allocation_matrix(self) -> np.ndarray:
        """4x4 map from squared rotor speeds to (thrust, tau_x, tau_y, tau_z)."""
        kf = self.thrust_coeff
        km = self.moment_coeff
        d = self.arm_length / math.sqrt(2.0)
        return np.array(
            [
                [kf, kf, kf, kf],
                [-kf * d, kf * d, kf * d, -kf * d],
                [-kf * d, kf * d, -kf * d, kf * d],
                [-km, -km, km, km],
            ]
        )


@dataclass
class MultirotorState:
    position: np.ndarray
    velocity: np.ndarray
    orientation: np.ndarray  # [w, x, y, z], body -> world
    angular_velocity: np.ndarray  # body frame
    rotor_speeds: np.ndarray  # (4,)
    time: float = 0.0

    def copy(self) -> "MultirotorState":
        return MultirotorState(
            self.position.copy(),
            self.velocity.copy(),
            self.orientation.copy(),
            self.angular_velocity.copy(),
            self.rotor_speeds.copy(),
            self.time,
        )


def hover_state(params: VehicleParams, position, yaw: float = 0.0) -> MultirotorState:
    """State at rest with rotors at hover speed."""
    w = params.hover_rotor_speed()
    return MultirotorState(
        position=np.asarray(position, dtype=float).copy(),
        velocity=np.zeros(3),
        orientation=quat_from_yaw(yaw),
        angular_velocity=np.zeros(3),
        rotor_speeds=np.full(4, w),
        time=0.0,
    )


class MotorCommand(NamedTuple):
    rotor_speeds: np.ndarray
    saturated: bool


def motor_mixing(thrust: float, moments, params: VehicleParams) -> MotorCommand:
    """Invert the allocation matrix for an X-quad; clamp to feasible speeds.

    Negative squared-speed solutions clamp to zero and speeds clamp to
    rotor_speed_max; saturation is reported through the flag, not an error.
    """
    if thrust < 0.0:
        raise ValueError("commanded thrust must be non-negative")
    tx, ty, tz = (float(m) for m in moments)
    kf = params.thrust_coeff
    km = params.moment_coeff
    d = params.arm_length / math.sqrt(2.0)
    a = thrust / kf
    p = tx / (kf * d)
    q = ty / (kf * d)
    r = tz / km
    u = 0.25 * np.array([a - p - q - r, a + p + q - r, a + p - q + r, a - p + q + r])
    u_max = params.rotor_speed_max**2
    clamped = np.clip(u, 0.0, u_max)
    saturated = bool(np.any(np.abs(clamped - u) > 1e-9 * max(1.0, u_max)))
    return MotorCommand(np.sqrt(clamped), saturated)


_DERIV_FIELDS = (
    ("position", slice(0, 3)),
    ("velocity", slice(3, 6)),
    ("orientation", slice(6, 10)),
    ("angular_velocity", slice(10, 13)),
    ("rotor_speeds", slice(13, 17)),
)


def _derivative(y: np.ndarray, cmd: np.ndarray, params: VehicleParams) -> np.ndarray:
    # Hot path: runs 4x per RK4 step at the physics rate; scalar math on
    # purpose (small-array numpy ops dominate the cost otherwise).
    (
        _, _, _,
        vx, vy, vz,
        qw, qx, qy, qz,
        wx, wy, wz,
        m0, m1, m2, m3,
    ) = y.tolist()
    w_max = params.rotor_speed_max
    r0 = min(max(m0, 0.0), w_max)
    r1 = min(max(m1, 0.0), w_max)
    r2 = min(max(m2, 0.0), w_max)
    r3 = min(max(m3, 0.0), w_max)

    qn2 = qw * qw + qx * qx + qy * qy + qz * qz
    if not qn2 > 1e-24:
        raise DynamicsError("non-finite derivative in field(s): orientation")
    inv_n = 1.0 / math.sqrt(qn2)
    qw *= inv_n
    qx *= inv_n
    qy *= inv_n
    qz *= inv_n

    u0, u1, u2, u3 = r0 * r0, r1 * r1, r2 * r2, r3 * r3
    kf = params.thrust_coeff
    km = params.moment_coeff
    d = params.arm_length * 0.7071067811865476
    thrust = kf * (u0 + u1 + u2 + u3)
    tau_x = kf * d * (-u0 + u1 + u2 - u3)
    tau_y = kf * d * (-u0 + u1 - u2 + u3)
    tau_z = km * (-u0 - u1 + u2 + u3)

    # Body z axis in world coordinates (third column of R(q)).
    bz_x = 2.0 * (qx * qz + qw * qy)
    bz_y = 2.0 * (qy * qz - qw * qx)
    bz_z = 1.0 - 2.0 * (qx * qx + qy * qy)

    inv_m = 1.0 / params.mass
    cd = params.drag_coeff
    ax = (thrust * bz_x - cd * vx) * inv_m
    ay = (thrust * bz_y - cd * vy) * inv_m
    az = (thrust * bz_z - cd * vz) * inv_m - params.gravity

    # qdot = 0.5 * q (x) (0, omega)
    qd_w = 0.5 * (-qx * wx - qy * wy - qz * wz)
    qd_x = 0.5 * (qw * wx + qy * wz - qz * wy)
    qd_y = 0.5 * (qw * wy + qz * wx - qx * wz)
    qd_z = 0.5 * (qw * wz + qx * wy - qy * wx)

    ix, iy, iz = params.inertia_diag
    wd_x = (tau_x - (wy * iz * wz - wz * iy * wy)) / ix
    wd_y = (tau_y - (wz * ix * wx - wx * iz * wz)) / iy
    wd_z = (tau_z - (wx * iy * wy - wy * ix * wx)) / iz

    inv_tm = 1.0 / params.motor_time_constant
    dy = np.array(
        [
            vx, vy, vz,
            ax, ay, az,
            qd_w, qd_x, qd_y, qd_z,
            wd_x, wd_y, wd_z,
            (cmd[0] - r0) * inv_tm,
            (cmd[1] - r1) * inv_tm,
            (cmd[2] - r2) * inv_tm,
            (cmd[3] - r3) * inv_tm,
        ]
    )
    if not math.isfinite(float(dy.sum())):
        bad = [name for name, sl in _DERIV_FIELDS if not np.all(np.isfinite(dy[sl]))]
        raise DynamicsError(f"non-finite derivative in field(s): {', '.join(bad)}")
    return dy


def step_dynamics(
    state: MultirotorState, rotor_speeds_cmd, dt: float, params: VehicleParams
) -> MultirotorState:
    """Advance the state by one RK4 step of length dt (dt in (0, 0.01])."""
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must be in (0, 0.01]")
    cmd = np.clip(
        np.asarray(rotor_speeds_cmd, dtype=float), 0.0, params.rotor_speed_max
    ).tolist()
    y0 = np.concatenate(
        (
            state.position,
            state.velocity,
            state.orientation,
            state.angular_velocity,
            state.rotor_speeds,
        )
    )
    k1 = _derivative(y0, cmd, params)
    k2 = _derivative(y0 + 0.5 * dt * k1, cmd, params)
    k3 = _derivative(y0 + 0.5 * dt * k2, cmd, params)
    k4 = _derivative(y0 + dt * k3, cmd, params)
    y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return MultirotorState(
        position=y1[0:3],
        velocity=y1[3:6],
        orientation=quat_normalize(y1[6:10]),
        angular_velocity=y1[10:13],
        rotor_speeds=np.clip(y1[13:17], 0.0, params.rotor_speed_max),
        time=state.time + dt,
    )
