"""Smoke training: a small SAC budget against a local or remote simulator.

Writes metrics.csv (step, episode, reward, length), learning_curve.png, and
trajectory.png (final-policy rollout: XY path + command traces).  A 10-episode
random-policy baseline is measured first for comparison.

Usage:
    python -m vinesim_gym.smoke_train --steps 2000 --out runs/smoke
    python -m vinesim_gym.smoke_train --uri ws://host:8765/sim --steps 500
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .client import launch_local_server
from .env import RemoteEnvConfig, RemoteNavEnv
from .plots import save_learning_curve, save_trajectory_plot


def random_policy_baseline(env, episodes: int = 10, seed: int = 1000):
    """Mean episode reward/length for uniform-random actions."""
    env.action_space.seed(seed)
    rewards, lengths = [], []
    for ep in range(episodes):
        obs, info = env.reset(seed=seed + ep)
        total, n = 0.0, 0
        while True:
            obs, r, term, trunc, info = env.step(env.action_space.sample())
            total += r
            n += 1
            if term or trunc:
                break
        rewards.append(total)
        lengths.append(n)
    return float(np.mean(rewards)), float(np.mean(lengths))


def rollout_policy(env, policy, seed: int, max_steps: int = 600):
    """Roll one episode; returns xy path, actions, and the outcome."""
    obs, info = env.reset(seed=seed)
    start = info.get("spawn", [0, 0])[:2]
    goal = info.get("goal", [0, 0])[:2]
    xy, actions = [], []
    outcome = "running"
    for _ in range(max_steps):
        action = policy(obs)
        obs, r, term, trunc, info = env.step(action)
        xy.append(info["position"][:2])
        actions.append(list(action))
        outcome = info["outcome"]
        if term or trunc:
            break
    return {"xy": xy, "actions": actions, "start": start, "goal": goal,
            "outcome": outcome}


def _train_with_sb3(env, steps, seed):  # pragma: no cover - needs sb3 installed
    from stable_baselines3 import SAC

    history = []

    class _Recorder:
        def __init__(self):
            self.ep = 0

    rec = _Recorder()
    orig_step = env.step
    state = {"reward": 0.0, "len": 0, "step": 0}

    def counting_step(action):
        out = orig_step(action)
        state["reward"] += out[1]
        state["len"] += 1
        state["step"] += 1
        if out[2] or out[3]:
            history.append((state["step"], rec.ep, state["reward"], state["len"]))
            rec.ep += 1
            state["reward"], state["len"] = 0.0, 0
        return out

    env.step = counting_step
    model = SAC("MlpPolicy", env, seed=seed, verbose=0)
    model.learn(total_timesteps=steps)
    env.step = orig_step

    def policy(obs):
        action, _ = model.predict(obs, deterministic=True)
        return action

    return policy, history, "stable-baselines3 SAC"


def _train_with_local_sac(env, steps, seed):
    from .sac import SacParams, train_sac

    def log(step, ep, reward, length, outcome):
        print(f"  step {step:6d} episode {ep:3d}: reward {reward:8.2f} "
              f"length {length:3d} ({outcome})")
        sys.stdout.flush()

    agent, history = train_sac(env, steps, SacParams(), seed=seed, log=log)

    def policy(obs):
        return agent.act(obs, deterministic=True)

    return policy, history, "bundled SAC (torch)"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--uri", default=None,
                        help="simulator URI; default spawns a local one")
    parser.add_argument("--scenario", default="vineyard_default")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs/smoke")
    parser.add_argument("--baseline-episodes", type=int, default=10)
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    proc = None
    uri = args.uri
    if uri is None:
        proc, uri = launch_local_server(scenario=args.scenario, seed=args.seed)
        print(f"spawned local simulator at {uri}")

    env = RemoteNavEnv(RemoteEnvConfig(uri=uri, scenario=args.scenario,
                                       seed=args.seed))
    try:
        baseline_r, baseline_len = random_policy_baseline(
            env, episodes=args.baseline_episodes, seed=args.seed + 1000
        )
        print(f"random-policy baseline over {args.baseline_episodes} episodes: "
              f"mean reward {baseline_r:.2f}, mean length {baseline_len:.1f}")

        try:
            import stable_baselines3  # noqa: F401

            trainer = _train_with_sb3
        except ImportError:
            trainer = _train_with_local_sac
        policy, history, algo = trainer(env, args.steps, args.seed)
        print(f"trained {args.steps} steps with {algo}; "
              f"{len(history)} episodes completed")

        rollout = rollout_policy(env, policy, seed=args.seed + 5000)
        print(f"final-policy rollout: {rollout['outcome']} "
              f"after {len(rollout['actions'])} steps")
    finally:
        env.close()
        if proc is not None:
            proc.terminate()
            proc.wait(timeout=10)

    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "episode", "reward", "length"])
        writer.writerows(history)
    save_learning_curve(history, out / "learning_curve.png",
                        baseline_reward=baseline_r)
    save_trajectory_plot(rollout, out / "trajectory.png")
    (out / "summary.json").write_text(json.dumps({
        "algo": algo,
        "steps": args.steps,
        "episodes": len(history),
        "random_baseline_reward": baseline_r,
        "random_baseline_length": baseline_len,
        "final_rollout_outcome": rollout["outcome"],
    }, indent=1))
    print(f"wrote {out / 'metrics.csv'}, learning_curve.png, trajectory.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
