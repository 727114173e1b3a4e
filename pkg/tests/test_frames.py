import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinesim import frames


finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6
)


def unit_quats():
    return (
        st.tuples(
            st.floats(min_value=-1.0, max_value=1.0),
            st.floats(min_value=-1.0, max_value=1.0),
            st.floats(min_value=-1.0, max_value=1.0),
            st.floats(min_value=-1.0, max_value=1.0),
        )
        .filter(lambda t: 0.1 < sum(x * x for x in t) < 4.0)
        .map(lambda t: frames.quat_normalize(np.array(t)))
    )


def test_zup_to_yup_declared_axes():
    assert np.array_equal(frames.zup_to_yup([0, 0, 1]), [0, 1, 0])
    assert np.array_equal(frames.zup_to_yup([1, 0, 0]), [0, 0, -1])
    assert np.array_equal(frames.zup_to_yup([0, 0, 0]), [0, 0, 0])


def test_yup_to_zup_declared_axes():
    assert np.array_equal(frames.yup_to_zup([0, 1, 0]), [0, 0, 1])
    assert np.array_equal(frames.yup_to_zup([0, 0, -1]), [1, 0, 0])


def test_round_trip_is_exact():
    v = np.array([1.5, -2.25, 3.0])
    assert np.array_equal(frames.yup_to_zup(frames.zup_to_yup(v)), v)


def test_axis_map_is_proper_rotation():
    assert np.linalg.det(frames.ZUP_TO_YUP_MAT) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(
        frames.ZUP_TO_YUP_MAT @ frames.ZUP_TO_YUP_MAT.T, np.eye(3), atol=1e-12
    )


@given(st.tuples(finite_floats, finite_floats, finite_floats))
def test_round_trip_property(v):
    v = np.array(v)
    assert np.array_equal(frames.yup_to_zup(frames.zup_to_yup(v)), v)


def test_frame_quat_identity_case():
    q = frames.rotate_quaternion_frame(frames.quat_identity())
    # Rotating Z-up "up" through the converted identity must give Y-up "up".
    out = frames.quat_rotate(q, frames.zup_to_yup([0, 0, 1]))
    assert np.allclose(out, [0, 1, 0], atol=1e-12)


def test_frame_quat_round_trip():
    q = frames.quat_from_axis_angle([0.3, -0.5, 0.8], 1.234)
    there = frames.rotate_quaternion_frame(q, "zup_to_yup")
    back = frames.rotate_quaternion_frame(there, "yup_to_zup")
    assert min(np.max(np.abs(back - q)), np.max(np.abs(back + q))) < 1e-12


def test_frame_quat_90deg_yaw_matches_matrix_conversion():
    # Independent oracle: convert the same rotation via matrices,
    # R_yup = M R_zup M^T, and compare quaternions up to sign.
    q = frames.quat_from_yaw(math.pi / 2)
    converted = frames.rotate_quaternion_frame(q)
    m_oracle = (
        frames.ZUP_TO_YUP_MAT @ frames.quat_to_matrix(q) @ frames.ZUP_TO_YUP_MAT.T
    )
    q_oracle = frames.matrix_to_quat(m_oracle)
    assert (
        min(np.max(np.abs(converted - q_oracle)), np.max(np.abs(converted + q_oracle)))
        < 1e-9
    )
    # A 90 deg yaw about Z-up is a 90 deg rotation about +Y in the Y-up frame.
    fwd_yup = frames.quat_rotate(converted, np.array([0.0, 0.0, -1.0]))
    assert np.allclose(fwd_yup, frames.zup_to_yup([0, 1, 0]), atol=1e-9)


def test_non_unit_quaternion_rejected():
    with pytest.raises(frames.FrameError):
        frames.rotate_quaternion_frame(np.array([1.0, 0.0, 0.0, 0.01]))


@settings(max_examples=200)
@given(unit_quats(), st.tuples(finite_floats, finite_floats, finite_floats))
def test_vector_rotation_commutes_with_frame_change(q, v):
    v = np.array(v)
    lhs = frames.zup_to_yup(frames.quat_rotate(q, v))
    rhs = frames.quat_rotate(frames.rotate_quaternion_frame(q), frames.zup_to_yup(v))
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1.0, float(np.linalg.norm(v))))


@given(unit_quats())
def test_matrix_quat_round_trip(q):
    q2 = frames.matrix_to_quat(frames.quat_to_matrix(q))
    assert min(np.max(np.abs(q2 - q)), np.max(np.abs(q2 + q))) < 1e-9


def test_wrap_to_pi():
    assert frames.wrap_to_pi(math.pi) == pytest.approx(math.pi)
    assert frames.wrap_to_pi(-math.pi) == pytest.approx(math.pi)
    assert frames.wrap_to_pi(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert frames.wrap_to_pi(0.25) == pytest.approx(0.25)
