import math
from pathlib import Path

import numpy as np
import pytest

import reference_cdr as ref
from fixture_messages import (
    CANONICAL_CAMERA,
    CANONICAL_STATE,
    canonical_camera_info,
    canonical_image,
    canonical_odometry,
    canonical_tf,
)
from vinesim.dynamics import MultirotorState
from vinesim.frames import quat_from_axis_angle, quat_multiply, quat_rotate
from vinesim.middleware import (
    CameraInfo,
    CdrDecodeError,
    CdrEncodeError,
    CdrReader,
    CdrWriter,
    Header,
    Image,
    Odometry,
    TFMessage,
    Time,
    build_camera_info,
    build_depth_image,
    build_odometry,
    cdr_decode,
    cdr_encode,
    to_stamp,
)
from vinesim.world import camera_world_pose

FIXTURES = Path(__file__).parent / "fixtures"


def test_header_golden_bytes_from_declared_example():
    data = cdr_encode(Header(Time(1, 500_000_000), ""))
    expected = bytes.fromhex("00010000" "01000000" "0065cd1d" "01000000" "00")
    assert data == expected
    assert data == ref.ref_encode_header(Header(Time(1, 500_000_000), ""))


def test_writer_u8_then_f64_inserts_seven_pad_bytes():
    w = CdrWriter()
    w.uint8(7)
    w.float64(1.0)
    body = bytes(w.body)
    assert len(body) == 16
    assert body[1:8] == b"\x00" * 7


@pytest.mark.parametrize(
    "name,builder,schema",
    [
        ("odometry.cdr", canonical_odometry, Odometry),
        ("image.cdr", canonical_image, Image),
        ("camera_info.cdr", canonical_camera_info, CameraInfo),
        ("tf.cdr", canonical_tf, TFMessage),
    ],
)
def test_golden_fixtures_roundtrip_byte_exact(name, builder, schema):
    golden = (FIXTURES / name).read_bytes()
    msg = builder()
    assert cdr_encode(msg) == golden
    assert cdr_decode(golden, schema) == msg


def test_golden_fixtures_match_reference_encoder():
    assert cdr_encode(canonical_odometry()) == ref.ref_encode_odometry(canonical_odometry())
    assert cdr_encode(canonical_image()) == ref.ref_encode_image(canonical_image())
    assert cdr_encode(canonical_camera_info()) == ref.ref_encode_camera_info(
        canonical_camera_info()
    )
    assert cdr_encode(canonical_tf()) == ref.ref_encode_tf(canonical_tf())


def _random_state(rng) -> MultirotorState:
    return MultirotorState(
        position=rng.uniform(-50, 50, 3),
        velocity=rng.uniform(-5, 5, 3),
        orientation=quat_from_axis_angle(rng.uniform(-1, 1, 3) + 0.01, rng.uniform(0, 3)),
        angular_velocity=rng.uniform(-3, 3, 3),
        rotor_speeds=rng.uniform(0, 1500, 4),
        time=float(rng.uniform(0, 1e4)),
    )


def test_odometry_roundtrip_randomized_1000():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        msg = build_odometry(_random_state(rng))
        assert cdr_decode(cdr_encode(msg), Odometry) == msg


def test_odometry_encoded_length_constant():
    rng = np.random.default_rng(5)
    lengths = {len(cdr_encode(build_odometry(_random_state(rng)))) for _ in range(50)}
    assert len(lengths) == 1


def test_odometry_preserves_all_state_numbers():
    msg = build_odometry(CANONICAL_STATE)
    out = cdr_decode(cdr_encode(msg), Odometry)
    p = out.pose.pose.position
    assert (p.x, p.y, p.z) == tuple(CANONICAL_STATE.position)
    q = out.pose.pose.orientation
    w, x, y, z = CANONICAL_STATE.orientation
    assert (q.x, q.y, q.z, q.w) == (x, y, z, w)
    assert out.header.frame_id == "world"
    assert out.child_frame_id == "base_link"


def test_decode_rejects_big_endian_encapsulation():
    with pytest.raises(CdrDecodeError, match="encapsulation"):
        cdr_decode(b"\x00\x00\x00\x00" + b"\x00" * 16, Header)


def test_decode_rejects_empty_payload():
    with pytest.raises(CdrDecodeError, match="offset 0"):
        cdr_decode(b"", Header)


def test_decode_rejects_truncation_with_offset():
    data = cdr_encode(canonical_odometry())
    with pytest.raises(CdrDecodeError, match="truncated"):
        cdr_decode(data[:100], Odometry)


def test_decode_rejects_trailing_garbage():
    data = cdr_encode(Header(Time(1, 2), "x"))
    with pytest.raises(CdrDecodeError, match="residue"):
        cdr_decode(data + b"\x00\x01\x02\x03\x04", Header)


def test_image_schema_validation():
    depth = np.zeros((2, 2), dtype=np.float32)
    msg = build_depth_image(depth, to_stamp(0.0))
    assert msg.step == 8 and len(msg.data) == 16
    msg.step = 7
    with pytest.raises(CdrEncodeError, match="step"):
        cdr_encode(msg)


def test_depth_image_serializes_infinity():
    depth = np.array([[np.inf]], dtype=np.float32)
    msg = build_depth_image(depth, to_stamp(0.0))
    out = cdr_decode(cdr_encode(msg), Image)
    assert math.isinf(np.frombuffer(out.data, dtype="<f4")[0])


def test_camera_info_intrinsics():
    info = build_camera_info(CANONICAL_CAMERA, to_stamp(0.0))
    assert info.k[0] == pytest.approx(160.0)  # fx = (320/2)/tan(45 deg)
    assert info.k[2] == pytest.approx(160.0)
    assert info.k[5] == pytest.approx(120.0)
    assert info.k[8] == 1.0


def test_tf_chain_composes_to_camera_world_pose():
    tf = canonical_tf()
    wb, bc = tf.transforms
    q_wb = np.array(
        [wb.transform.rotation.w, wb.transform.rotation.x,
         wb.transform.rotation.y, wb.transform.rotation.z]
    )
    q_bc = np.array(
        [bc.transform.rotation.w, bc.transform.rotation.x,
         bc.transform.rotation.y, bc.transform.rotation.z]
    )
    t_wb = np.array(
        [wb.transform.translation.x, wb.transform.translation.y, wb.transform.translation.z]
    )
    t_bc = np.array(
        [bc.transform.translation.x, bc.transform.translation.y, bc.transform.translation.z]
    )
    pos_composed = t_wb + quat_rotate(q_wb, t_bc)
    quat_composed = quat_multiply(q_wb, q_bc)

    pos_direct, quat_direct = camera_world_pose(
        CANONICAL_STATE.position, CANONICAL_STATE.orientation, CANONICAL_CAMERA
    )
    assert np.max(np.abs(pos_composed - pos_direct)) < 1e-9
    assert (
        min(
            np.max(np.abs(quat_composed - quat_direct)),
            np.max(np.abs(quat_composed + quat_direct)),
        )
        < 1e-9
    )
