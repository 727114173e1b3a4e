import json
import math

import numpy as np
import pytest

from vinesim.frames import quat_from_yaw, quat_angle_between
from vinesim.missions import circular_capture_waypoints, run_capture_mission
from vinesim.server.core import SimCore
from vinesim.world import TRUNK_HEIGHT, CANOPY_SEMI_Z

TREE_CENTER = np.array([0.0, 0.0, TRUNK_HEIGHT + 0.35 * CANOPY_SEMI_Z])


def _capture(tmp_path, n, radius=3.0):
    core = SimCore(scenario="single_tree", seed=0)
    wps = circular_capture_waypoints(TREE_CENTER, radius, TREE_CENTER[2], n)
    manifest = run_capture_mission(core, wps, tmp_path / "out")
    return core, wps, manifest, tmp_path / "out"


def test_capture_mission_writes_complete_dataset(tmp_path):
    core, wps, manifest, out = _capture(tmp_path, 4)
    assert manifest["status"] == "complete"
    assert manifest["completed"] == 4
    lines = (out / "poses.txt").read_text().strip().splitlines()
    assert len(lines) == 4
    for k in range(4):
        for suffix in ("rgb.png", "seg.png", "depth.npy"):
            assert (out / "images" / f"{k:03d}_{suffix}").exists()
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["camera"]["fx"] == pytest.approx(320.0)  # 640 px, 90 deg fov

    for k, line in enumerate(lines):
        parts = line.split()
        assert parts[0] == f"{k:03d}_rgb.png"
        pos = np.array([float(v) for v in parts[1:4]])
        quat = np.array([float(v) for v in parts[4:8]])
        wp = wps[k]
        assert np.linalg.norm(pos - wp.position) < 0.1
        ang = quat_angle_between(quat, quat_from_yaw(wp.yaw))
        assert math.degrees(ang) < 2.0
        # Boresight ray from the recorded pose passes near the tree centre.
        yaw = math.atan2(
            2 * (quat[0] * quat[3] + quat[1] * quat[2]),
            1 - 2 * (quat[2] ** 2 + quat[3] ** 2),
        )
        d = np.array([math.cos(yaw), math.sin(yaw), 0.0])
        rel = TREE_CENTER - pos
        miss = np.linalg.norm(rel - (rel @ d) * d)
        assert miss < 0.05


def test_capture_images_see_the_tree(tmp_path):
    core, wps, manifest, out = _capture(tmp_path, 4)
    seg_counts = 0
    for k in range(4):
        depth = np.load(out / "images" / f"{k:03d}_depth.npy")
        assert depth.shape == (480, 640)
        center_px = depth[240, 320]
        assert math.isfinite(center_px)
        assert abs(center_px - 3.0) < 0.8  # camera ~3 m from the canopy centre
        from PIL import Image

        seg = np.asarray(Image.open(out / "images" / f"{k:03d}_seg.png"))
        seg_counts += int(np.count_nonzero(seg == 3))  # canopy class visible
    assert seg_counts > 1000


def test_capture_empty_waypoints_valid_manifest(tmp_path):
    core = SimCore(scenario="single_tree", seed=0)
    manifest = run_capture_mission(core, [], tmp_path / "out")
    assert manifest["waypoint_count"] == 0
    assert manifest["completed"] == 0
    assert manifest["status"] == "complete"
    assert (tmp_path / "out" / "poses.txt").exists()
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())


def test_capture_timeout_produces_partial_manifest(tmp_path):
    core = SimCore(scenario="single_tree", seed=0)
    wps = circular_capture_waypoints(TREE_CENTER, 3.0, TREE_CENTER[2], 3)
    manifest = run_capture_mission(core, wps, tmp_path / "out", timeout_s=0.05)
    assert manifest["completed"] < 3
    assert "timeout" in manifest["status"]
