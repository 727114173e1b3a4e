"""Compact Soft Actor-Critic used when stable-baselines3 is unavailable.

Standard recipe: twin soft Q networks with Polyak-averaged targets, a
squashed-Gaussian policy, and automatic entropy-temperature tuning toward
-dim(A).  Sized for smoke runs, not benchmark performance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import torch
    from torch import nn
except ImportError as exc:  # pragma: no cover
    raise ImportError(
        "the bundled SAC needs torch; install torch or stable-baselines3"
    ) from exc


@dataclass
class SacParams:
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 3e-4
    batch_size: int = 128
    buffer_size: int = 50_000
    start_steps: int = 300
    hidden: int = 128
    updates_per_step: int = 1


class _ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int, rng):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.act = np.zeros((capacity, act_dim), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self.ptr = 0
        self.rng = rng

    def add(self, o, a, r, o2, d):
        i = self.ptr
        self.obs[i] = o
        self.act[i] = a
        self.rew[i] = r
        self.next_obs[i] = o2
        self.done[i] = d
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch):
        idx = self.rng.integers(0, self.size, size=batch)
        to = torch.as_tensor
        return (
            to(self.obs[idx]),
            to(self.act[idx]),
            to(self.rew[idx]).unsqueeze(1),
            to(self.next_obs[idx]),
            to(self.done[idx]).unsqueeze(1),
        )


def _mlp(inp, out, hidden):
    return nn.Sequential(
        nn.Linear(inp, hidden), nn.ReLU(),
        nn.Linear(hidden, hidden), nn.ReLU(),
        nn.Linear(hidden, out),
    )


class _Actor(nn.Module):
    LOG_STD_MIN, LOG_STD_MAX = -10.0, 2.0

    def __init__(self, obs_dim, act_dim, hidden, act_low, act_high):
        super().__init__()
        self.net = _mlp(obs_dim, 2 * act_dim, hidden)
        self.register_buffer("scale", torch.as_tensor((act_high - act_low) / 2.0))
        self.register_buffer("bias", torch.as_tensor((act_high + act_low) / 2.0))

    def forward(self, obs, deterministic=False):
        mean, log_std = self.net(obs).chunk(2, dim=-1)
        log_std = torch.clamp(log_std, self.LOG_STD_MIN, self.LOG_STD_MAX)
        dist = torch.distributions.Normal(mean, log_std.exp())
        raw = mean if deterministic else dist.rsample()
        squashed = torch.tanh(raw)
        action = squashed * self.scale + self.bias
        log_prob = dist.log_prob(raw) - torch.log(
            self.scale * (1.0 - squashed.pow(2)) + 1e-6
        )
        return action, log_prob.sum(-1, keepdim=True)


class _Critic(nn.Module):
    def __init__(self, obs_dim, act_dim, hidden):
        super().__init__()
        self.q1 = _mlp(obs_dim + act_dim, 1, hidden)
        self.q2 = _mlp(obs_dim + act_dim, 1, hidden)

    def forward(self, obs, act):
        x = torch.cat([obs, act], dim=-1)
        return self.q1(x), self.q2(x)


class SacAgent:
    def __init__(self, obs_dim: int, act_dim: int, act_low, act_high,
                 params: SacParams, seed: int = 0):
        torch.manual_seed(seed)
        self.p = params
        act_low = np.asarray(act_low, dtype=np.float32)
        act_high = np.asarray(act_high, dtype=np.float32)
        self.actor = _Actor(obs_dim, act_dim, params.hidden, act_low, act_high)
        self.critic = _Critic(obs_dim, act_dim, params.hidden)
        self.target = _Critic(obs_dim, act_dim, params.hidden)
        self.target.load_state_dict(self.critic.state_dict())
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=params.lr)
        self.critic_opt = torch.optim.Adam(self.critic.parameters(), lr=params.lr)
        self.log_alpha = torch.zeros(1, requires_grad=True)
        self.alpha_opt = torch.optim.Adam([self.log_alpha], lr=params.lr)
        self.target_entropy = -float(act_dim)
        self.buffer = _ReplayBuffer(
            params.buffer_size, obs_dim, act_dim, np.random.default_rng(seed)
        )

    def act(self, obs, deterministic=False) -> np.ndarray:
        with torch.no_grad():
            a, _ = self.actor(
                torch.as_tensor(obs, dtype=torch.float32).unsqueeze(0), deterministic
            )
        return a.squeeze(0).numpy()

    def update(self):
        p = self.p
        if self.buffer.size < p.batch_size:
            return
        obs, act, rew, next_obs, done = self.buffer.sample(p.batch_size)
        alpha = self.log_alpha.exp().detach()

        with torch.no_grad():
            next_a, next_logp = self.actor(next_obs)
            tq1, tq2 = self.target(next_obs, next_a)
            target_q = rew + p.gamma * (1.0 - done) * (
                torch.min(tq1, tq2) - alpha * next_logp
            )
        q1, q2 = self.critic(obs, act)
        critic_loss = nn.functional.mse_loss(q1, target_q) + nn.functional.mse_loss(
            q2, target_q
        )
        self.critic_opt.zero_grad()
        critic_loss.backward()
        self.critic_opt.step()

        new_a, logp = self.actor(obs)
        q1_pi, q2_pi = self.critic(obs, new_a)
        actor_loss = (alpha * logp - torch.min(q1_pi, q2_pi)).mean()
        self.actor_opt.zero_grad()
        actor_loss.backward()
        self.actor_opt.step()

        alpha_loss = -(self.log_alpha * (logp + self.target_entropy).detach()).mean()
        self.alpha_opt.zero_grad()
        alpha_loss.backward()
        self.alpha_opt.step()

        with torch.no_grad():
            for tp, sp in zip(self.target.parameters(), self.critic.parameters()):
                tp.lerp_(sp, p.tau)


def train_sac(env, total_steps: int, params: SacParams | None = None, seed: int = 0,
              log=None):
    """Closed-loop SAC training; returns per-step history rows
    (step, episode, episode_reward, episode_length) recorded at episode ends."""
    params = params or SacParams()
    obs_dim = int(np.prod(env.observation_space.shape))
    act_dim = int(np.prod(env.action_space.shape))
    agent = SacAgent(
        obs_dim, act_dim, env.action_space.low, env.action_space.high, params, seed
    )
    env.action_space.seed(seed)

    history = []
    obs, _ = env.reset(seed=seed)
    ep_reward, ep_len, episode = 0.0, 0, 0
    for step in range(1, total_steps + 1):
        if step <= params.start_steps:
            action = env.action_space.sample()
        else:
            action = agent.act(obs)
        next_obs, reward, terminated, truncated, info = env.step(action)
        agent.buffer.add(obs, action, reward, next_obs, float(terminated))
        obs = next_obs
        ep_reward += reward
        ep_len += 1
        if step > params.start_steps:
            for _ in range(params.updates_per_step):
                agent.update()
        if terminated or truncated:
            history.append((step, episode, ep_reward, ep_len))
            if log is not None:
                log(step, episode, ep_reward, ep_len, info.get("outcome"))
            episode += 1
            ep_reward, ep_len = 0.0, 0
            obs, _ = env.reset()
    return agent, history
