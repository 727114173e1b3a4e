import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinesim.dynamics import (
    DynamicsError,
    MultirotorState,
    VehicleParams,
    hover_state,
    motor_mixing,
    step_dynamics,
)
from vinesim.frames import quat_from_axis_angle, quat_to_matrix

PARAMS = VehicleParams()
NO_DRAG = VehicleParams(drag_coeff=0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(mass=-1.0)
    with pytest.raises(ValueError):
        VehicleParams(inertia_diag=(1e-3, 0.0, 1e-3))
    with pytest.raises(ValueError):
        VehicleParams(rotor_speed_max=100.0)  # below hover speed


def test_mixing_hover_symmetry():
    w = motor_mixing(PARAMS.mass * PARAMS.gravity, np.zeros(3), PARAMS).rotor_speeds
    assert np.allclose(w, w[0])
    assert 4.0 * PARAMS.thrust_coeff * w[0] ** 2 == pytest.approx(
        PARAMS.mass * PARAMS.gravity, rel=1e-12
    )


def test_mixing_zero_case():
    cmd = motor_mixing(0.0, np.zeros(3), PARAMS)
    assert np.array_equal(cmd.rotor_speeds, np.zeros(4))
    assert not cmd.saturated


def test_mixing_roll_round_trip():
    wrench = np.array([PARAMS.mass * PARAMS.gravity, 0.05, 0.0, 0.0])
    cmd = motor_mixing(wrench[0], wrench[1:], PARAMS)
    assert not cmd.saturated
    # Diagonal pattern: left pair speeds up, right pair slows down.
    assert cmd.rotor_speeds[1] > cmd.rotor_speeds[0]
    assert cmd.rotor_speeds[2] > cmd.rotor_speeds[3]
    reproduced = PARAMS.allocation_matrix() @ (cmd.rotor_speeds**2)
    assert np.allclose(reproduced, wrench, atol=1e-9)


def test_mixing_saturation_reproduces_clamped_wrench():
    cmd = motor_mixing(PARAMS.mass * PARAMS.gravity, [5.0, 0.0, 0.0], PARAMS)
    assert cmd.saturated
    assert np.all(cmd.rotor_speeds >= 0.0)
    assert np.all(cmd.rotor_speeds <= PARAMS.rotor_speed_max)


def test_hover_equilibrium_fixed_point():
    s0 = hover_state(PARAMS, [0.0, 0.0, 2.0])
    s1 = step_dynamics(s0, s0.rotor_speeds, 0.002, PARAMS)
    assert np.max(np.abs(s1.position - s0.position)) < 1e-6
    assert np.max(np.abs(s1.velocity - s0.velocity)) < 1e-6


def test_free_fall():
    s = hover_state(NO_DRAG, [0.0, 0.0, 50.0])
    s.rotor_speeds = np.zeros(4)
    for _ in range(500):
        s = step_dynamics(s, np.zeros(4), 0.002, NO_DRAG)
    assert s.velocity[2] == pytest.approx(-9.81, abs=1e-6)


def _derivative_oracle(y, cmd, p):
    """Independent Newton-Euler derivative, written out field by field."""
    vel = y[3:6]
    q = y[6:10] / np.linalg.norm(y[6:10])
    omega = y[10:13]
    rotors = np.clip(y[13:17], 0.0, p.rotor_speed_max)
    u = rotors**2
    kf, km = p.thrust_coeff, p.moment_coeff
    d = p.arm_length / math.sqrt(2.0)
    thrust_body = np.array([0.0, 0.0, kf * np.sum(u)])
    tau = np.array(
        [
            kf * d * (-u[0] + u[1] + u[2] - u[3]),
            kf * d * (-u[0] + u[1] - u[2] + u[3]),
            km * (-u[0] - u[1] + u[2] + u[3]),
        ]
    )
    rot = quat_to_matrix(q)
    acc = (rot @ thrust_body - p.drag_coeff * vel) / p.mass + np.array(
        [0.0, 0.0, -p.gravity]
    )
    w, x, yq, z = q
    omega_q = np.array(
        [
            -x * omega[0] - yq * omega[1] - z * omega[2],
            w * omega[0] + yq * omega[2] - z * omega[1],
            w * omega[1] + z * omega[0] - x * omega[2],
            w * omega[2] + x * omega[1] - yq * omega[0],
        ]
    )
    qdot = 0.5 * omega_q
    inertia = np.array(p.inertia_diag)
    omega_dot = (tau - np.cross(omega, inertia * omega)) / inertia
    rotor_dot = (cmd - rotors) / p.motor_time_constant
    return np.concatenate((vel, acc, qdot, omega_dot, rotor_dot))


def test_rk4_against_fine_euler_oracle():
    # Gentle off-equilibrium state: rotor transients bounded so that the
    # first-order oracle at dt=1e-4 stays within the comparison tolerance.
    w_h = PARAMS.hover_rotor_speed()
    s = MultirotorState(
        position=np.array([1.0, -2.0, 3.0]),
        velocity=np.array([0.3, -0.2, 0.1]),
        orientation=quat_from_axis_angle([0.3, 1.0, 0.2], 0.05),
        angular_velocity=np.array([0.05, -0.04, 0.03]),
        rotor_speeds=w_h + np.array([0.2, -0.2, 0.2, -0.2]),
        time=0.0,
    )
    cmd = np.full(4, w_h)
    stepped = step_dynamics(s, cmd, 0.002, PARAMS)

    y = np.concatenate(
        (s.position, s.velocity, s.orientation, s.angular_velocity, s.rotor_speeds)
    )
    for _ in range(20):
        y = y + 1e-4 * _derivative_oracle(y, cmd, PARAMS)
    y[6:10] /= np.linalg.norm(y[6:10])

    got = np.concatenate(
        (
            stepped.position,
            stepped.velocity,
            stepped.orientation,
            stepped.angular_velocity,
            stepped.rotor_speeds,
        )
    )
    assert np.max(np.abs(got - y)) < 1e-5


def test_energy_conserved_in_level_drift():
    p = NO_DRAG
    s = hover_state(p, [0.0, 0.0, 5.0])
    s.velocity = np.array([1.0, 0.0, 0.0])

    def energy(st):
        ke = 0.5 * p.mass * float(st.velocity @ st.velocity)
        return ke + p.mass * p.gravity * st.position[2]

    e0 = energy(s)
    for _ in range(500):
        s = step_dynamics(s, s.rotor_speeds, 0.002, p)
    assert abs(energy(s) - e0) < 1e-6


def test_motor_lag_exponential_convergence():
    s = hover_state(PARAMS, [0.0, 0.0, 2.0])
    s.rotor_speeds = np.full(4, 500.0)
    cmd = np.full(4, 1000.0)
    e0 = 500.0
    steps = int(round(3.0 * PARAMS.motor_time_constant / 0.002))
    for _ in range(steps):
        s = step_dynamics(s, cmd, 0.002, PARAMS)
    err = abs(float(s.rotor_speeds[0]) - 1000.0)
    assert err / e0 < 0.051


def test_step_is_deterministic():
    s = hover_state(PARAMS, [1.0, 2.0, 3.0])
    s.angular_velocity = np.array([0.3, -0.1, 0.2])
    a = step_dynamics(s, s.rotor_speeds + 5.0, 0.002, PARAMS)
    b = step_dynamics(s, s.rotor_speeds + 5.0, 0.002, PARAMS)
    for f in ("position", "velocity", "orientation", "angular_velocity", "rotor_speeds"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


@settings(max_examples=50, deadline=None)
@given(
    st.tuples(*([st.floats(min_value=-0.5, max_value=0.5)] * 3)),
    st.floats(min_value=0.0, max_value=math.pi),
    st.tuples(*([st.floats(min_value=-2.0, max_value=2.0)] * 3)),
)
def test_quaternion_stays_unit(axis_raw, angle, omega):
    axis = np.array(axis_raw) + np.array([0.1, 0.0, 0.0])
    s = MultirotorState(
        position=np.zeros(3),
        velocity=np.zeros(3),
        orientation=quat_from_axis_angle(axis, angle),
        angular_velocity=np.array(omega),
        rotor_speeds=np.full(4, PARAMS.hover_rotor_speed()),
        time=0.0,
    )
    for _ in range(10):
        s = step_dynamics(s, s.rotor_speeds, 0.002, PARAMS)
        assert abs(np.linalg.norm(s.orientation) - 1.0) < 1e-9


def test_nan_rejected_with_field_name():
    s = hover_state(PARAMS, [0.0, 0.0, 1.0])
    s.velocity = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(DynamicsError, match="velocity"):
        step_dynamics(s, s.rotor_speeds, 0.002, PARAMS)


def test_dt_out_of_range_rejected():
    s = hover_state(PARAMS, [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        step_dynamics(s, s.rotor_speeds, 0.02, PARAMS)
    with pytest.raises(ValueError):
        step_dynamics(s, s.rotor_speeds, 0.0, PARAMS)
