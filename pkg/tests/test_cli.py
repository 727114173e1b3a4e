import json
import subprocess
import sys

import numpy as np
import pytest

from vinesim.config import ConfigError, DEFAULT_CONFIG_TOML, load_config, parse_config
from vinesim.cli import main as cli_main
from vinesim.missions import TrajectoryLog, save_trajectory_log
from vinesim.world import generate_vineyard, save_scene


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "vinesim.cli", *args],
        capture_output=True, text=True, timeout=300,
    )


@pytest.mark.parametrize(
    "args", [["--help"], ["serve", "--help"], ["capture", "--help"],
             ["latency-bench", "--help"], ["metrics", "--help"]]
)
def test_help_exits_zero(args):
    out = run_cli(args)
    assert out.returncode == 0
    assert "usage" in out.stdout.lower()


def test_usage_error_exits_one():
    out = run_cli(["latency-bench", "--streams", "bogus", "--duration", "1"])
    assert out.returncode == 1
    out = run_cli(["no-such-command"])
    assert out.returncode == 1


def test_default_config_toml_parses_to_defaults():
    import tomli

    doc = tomli.loads(DEFAULT_CONFIG_TOML)
    cfg = parse_config(doc)
    baseline = parse_config({})
    assert cfg == baseline


def test_config_validation_names_fields(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[gains]\nk_pos = [6.0, -1.0, 10.0]\n")
    with pytest.raises(ConfigError, match="k_pos"):
        load_config(bad)
    bad.write_text("[rates]\nphysics_hz = -5.0\n")
    with pytest.raises(ConfigError, match="physics_hz"):
        load_config(bad)
    bad.write_text("[rates]\nphysics_hz = 10.0\nsensor_hz = 30.0\n")
    with pytest.raises(ConfigError, match="physics_hz"):
        load_config(bad)
    bad.write_text("[camera.rl]\nwidth = 100\n")
    with pytest.raises(ConfigError, match="divisible"):
        load_config(bad)
    bad.write_text("[vehicle]\nwarp_drive = 1\n")
    with pytest.raises(ConfigError, match="warp_drive"):
        load_config(bad)


def test_serve_rejects_invalid_gain_config(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[gains]\nk_pos = [-6.0, 6.0, 10.0]\n")
    out = run_cli(["serve", "--config", str(bad), "--port", "0"])
    assert out.returncode == 2
    assert "k_pos" in out.stderr


def test_latency_bench_small_run_csv():
    out = run_cli(
        ["latency-bench", "--duration", "1", "--rate", "30", "--fast",
         "--streams", "odom"]
    )
    assert out.returncode == 0
    lines = out.stdout.strip().splitlines()
    assert lines[0] == "stream,mean_ms,std_ms,n"
    stream, mean_ms, std_ms, n = lines[1].split(",")
    assert stream == "odom"
    assert int(n) == 30
    assert float(mean_ms) > 0
    assert "budget" in out.stderr


def test_metrics_on_synthetic_log(tmp_path):
    scene = generate_vineyard(2, 3, 3.0, 1.5, seed=1)
    scene_path = tmp_path / "scene.json"
    save_scene(scene, scene_path)
    xs = np.arange(-2.0, 4.0 + 1e-9, 0.5)
    log = TrajectoryLog(
        times=np.arange(len(xs), dtype=float) * 0.5,
        positions=np.stack([xs, np.full_like(xs, 1.5), np.full_like(xs, 1.8)], axis=1),
        yaws=np.zeros_like(xs),
    )
    log_path = tmp_path / "log.csv"
    save_trajectory_log(log, log_path)
    out = run_cli(
        ["metrics", str(log_path), str(scene_path), "--goal", "4.0", "1.5", "1.8",
         "--format", "json"]
    )
    assert out.returncode == 0
    doc = json.loads(out.stdout)
    assert doc["flight_time_s"] == pytest.approx(0.5 * (len(xs) - 1))
    assert doc["goal_convergence_m"] == pytest.approx(0.0, abs=1e-12)
    assert doc["obstacle_clearance_m"] > 0.0


def test_metrics_on_empty_log_errors(tmp_path):
    scene_path = tmp_path / "scene.json"
    save_scene(generate_vineyard(1, 1, 3.0, 1.5, seed=0), scene_path)
    empty = tmp_path / "empty.csv"
    empty.write_text("t,x,y,z,yaw\n")
    out = run_cli(
        ["metrics", str(empty), str(scene_path), "--goal", "0", "0", "0"]
    )
    assert out.returncode == 2
    assert "empty" in out.stderr


def test_capture_n_zero_creates_valid_empty_dataset(tmp_path):
    out = run_cli(["capture", "--n", "0", "--out", str(tmp_path / "ds")])
    assert out.returncode == 0
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["waypoint_count"] == 0


def test_capture_small_run_end_to_end(tmp_path):
    out = run_cli(["capture", "--n", "3", "--out", str(tmp_path / "ds")])
    assert out.returncode == 0
    assert "3/3" in out.stdout
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["completed"] == 3
    poses = (tmp_path / "ds" / "poses.txt").read_text().strip().splitlines()
    assert len(poses) == 3


def test_capture_altitude_below_ground_rejected(tmp_path):
    out = run_cli(
        ["capture", "--n", "2", "--altitude", "-1.0", "--out", str(tmp_path / "ds")]
    )
    assert out.returncode == 2
    assert "ground" in out.stderr


def test_serve_smoke_handshake_and_sigint(tmp_path):
    import asyncio
    import signal
    import socket
    import time as _time

    # Pick a free port, start serve as a subprocess, handshake, SIGINT.
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen(
        [sys.executable, "-m", "vinesim.cli", "serve", "--port", str(port),
         "--scenario", "empty", "--fast", "--no-sensors"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        deadline = _time.monotonic() + 20
        line = ""
        while _time.monotonic() < deadline:
            line = proc.stdout.readline()
            if "serving" in line:
                break
        assert "serving" in line

        async def client():
            from websockets.asyncio.client import connect

            async with connect(f"ws://127.0.0.1:{port}/sim") as ws:
                await ws.send(json.dumps({"type": "handshake", "client_kind": "viewer"}))
                reply = json.loads(await ws.recv())
                assert reply["type"] == "session"

        asyncio.run(asyncio.wait_for(client(), timeout=15))
        proc.send_signal(signal.SIGINT)
        proc.wait(timeout=15)
        assert proc.returncode == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()
