"""Learning-curve and rollout-trajectory plots (PNG, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def save_learning_curve(history, out_path, baseline_reward=None):
    """history rows: (step, episode, episode_reward, episode_length)."""
    out_path = Path(out_path)
    fig, (ax_r, ax_l) = plt.subplots(1, 2, figsize=(10, 4))
    if history:
        steps = [h[0] for h in history]
        rewards = [h[2] for h in history]
        lengths = [h[3] for h in history]
        ax_r.plot(steps, rewards, lw=0.8, alpha=0.5, color="tab:blue")
        ax_l.plot(steps, lengths, lw=0.8, alpha=0.5, color="tab:orange")
        if len(rewards) >= 5:
            k = max(3, len(rewards) // 10)
            kernel = np.ones(k) / k
            ax_r.plot(steps[k - 1:], np.convolve(rewards, kernel, "valid"),
                      lw=2, color="tab:blue", label=f"mean over {k} episodes")
            ax_l.plot(steps[k - 1:], np.convolve(lengths, kernel, "valid"),
                      lw=2, color="tab:orange")
            ax_r.legend(loc="best", fontsize=8)
    if baseline_reward is not None:
        ax_r.axhline(baseline_reward, ls="--", color="gray",
                     label="random-policy baseline")
        ax_r.legend(loc="best", fontsize=8)
    ax_r.set_xlabel("environment steps")
    ax_r.set_ylabel("episode reward")
    ax_l.set_xlabel("environment steps")
    ax_l.set_ylabel("episode length")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def save_trajectory_plot(rollout, out_path):
    """rollout: dict with keys xy (n, 2), actions (n, 2), start, goal, outcome."""
    out_path = Path(out_path)
    xy = np.asarray(rollout["xy"])
    actions = np.asarray(rollout["actions"])
    fig, (ax_xy, ax_cmd) = plt.subplots(
        1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [1.1, 1]}
    )
    if len(xy):
        colors = np.linspace(0.0, 1.0, len(xy))
        ax_xy.scatter(xy[:, 0], xy[:, 1], c=colors, cmap="viridis", s=8)
        ax_xy.plot(xy[:, 0], xy[:, 1], lw=0.6, color="gray", alpha=0.6)
    start = rollout.get("start")
    goal = rollout.get("goal")
    if start is not None:
        ax_xy.plot(start[0], start[1], "g^", ms=10, label="start")
    if goal is not None:
        ax_xy.plot(goal[0], goal[1], "r*", ms=14, label="goal")
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_title(f"rollout ({rollout.get('outcome', '?')})")
    ax_xy.axis("equal")
    ax_xy.legend(loc="best", fontsize=8)

    if len(actions):
        steps = np.arange(len(actions))
        ax_cmd.plot(steps, actions[:, 0], label="v_fwd [m/s]")
        ax_cmd.plot(steps, actions[:, 1], label="yaw_rate [rad/s]")
    ax_cmd.set_xlabel("agent step")
    ax_cmd.set_ylabel("command")
    ax_cmd.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
