import json
import subprocess
import sys
from pathlib import Path

import pytest


@pytest.mark.parametrize("steps", [2000])
def test_sac_smoke_run_completes_and_emits_plots(tmp_path, steps):
    """The full smoke-training acceptance run: SAC for 2000 steps against a
    self-spawned simulator, with a random-policy baseline and both plots."""
    out = tmp_path / "run"
    result = subprocess.run(
        [sys.executable, "-m", "vinesim_gym.smoke_train",
         "--steps", str(steps), "--out", str(out), "--seed", "0"],
        capture_output=True, text=True, timeout=3000,
    )
    assert result.returncode == 0, result.stderr[-2000:]
    assert (out / "metrics.csv").exists()
    assert (out / "learning_curve.png").stat().st_size > 1000
    assert (out / "trajectory.png").stat().st_size > 1000
    summary = json.loads((out / "summary.json").read_text())
    assert summary["steps"] == steps
    assert summary["episodes"] >= 1
    rows = (out / "metrics.csv").read_text().strip().splitlines()
    assert rows[0] == "step,episode,reward,length"
    assert len(rows) - 1 == summary["episodes"]
    assert "random-policy baseline" in result.stdout
