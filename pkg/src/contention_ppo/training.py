"""Pieces shared by the PPO and DQN trainers: hyperparameters, actors, features, evaluation."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import streams
from .neural import RecurrentNet
from .radio import features
from .radio.config import Configuration, NetworkConfig, sample_configuration
from .radio.env import Policy, Trajectory, run_episodes


@dataclass(frozen=True)
class TrainConfig:
    clip_eps: float = 0.2
    gamma: float = 1.0 - 1e-6
    gae_lambda: float = 0.0
    c1: float = 0.5
    c2: float = 0.01
    c3: float = 0.5
    lr: float = 4e-4
    lr_decay_factor: float = 0.85
    lr_decay_period: int = 500
    n_batch: int = 8
    iterations: int = 800
    val_every: int = 50
    rate_every: int = 600
    centralized_critic: bool = True
    normalize_advantages: bool = True
    ppo_hidden: int = 128
    dqn_hidden: int = 256
    dense_width: int = 64
    policy_head_scale: float = 1.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.5
    target_every: int = 4
    huber_delta: float = 1.0

    def __post_init__(self):
        checks = [
            (0.0 < self.clip_eps < 1.0, "clip_eps must lie in (0, 1)"),
            (0.0 < self.gamma <= 1.0, "gamma must lie in (0, 1]"),
            (0.0 <= self.gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]"),
            (min(self.c1, self.c2, self.c3) >= 0.0, "loss weights must be non-negative"),
            (self.lr >= 0.0, "lr must be non-negative"),
            (0.0 < self.lr_decay_factor <= 1.0, "lr_decay_factor must lie in (0, 1]"),
            (self.lr_decay_period >= 0, "lr_decay_period must be non-negative"),
            (self.n_batch >= 1, "n_batch must be >= 1"),
            (self.iterations >= 0, "iterations must be non-negative"),
            (self.val_every >= 1 and self.rate_every >= 1, "validation cadences must be >= 1"),
            (min(self.ppo_hidden, self.dqn_hidden, self.dense_width) >= 1, "layer widths must be >= 1"),
            (0.0 <= self.eps_end <= self.eps_start <= 1.0, "need 0 <= eps_end <= eps_start <= 1"),
            (0.0 < self.eps_decay_frac <= 1.0, "eps_decay_frac must lie in (0, 1]"),
            (self.target_every >= 1, "target_every must be >= 1"),
            (self.huber_delta > 0.0, "huber_delta must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# ---------------------------------------------------------------- actors


class NetPolicy(Policy):
    """Decentralised actor: one recurrent net per BS, fed the local CON observation.

    ``rule`` picks the action from the net output and the lane's uniform draw:

    * ``"sample"``  - softmax output, transmit with probability ``p[1]``
    * ``"greedy"``  - argmax of the output, exact ties go to transmit
    * ``"epsilon"`` - epsilon-greedy on Q values (greedy part as above)
    """

    def __init__(self, nets: list[RecurrentNet], net_cfg: NetworkConfig, rule: str = "greedy", epsilon: float = 0.0, record: bool = False):
        if rule not in ("sample", "greedy", "epsilon"):
            raise ValueError(f"unknown action rule {rule!r}")
        if len(nets) != net_cfg.n_bs:
            raise ValueError("need one net per BS")
        self.nets = nets
        self.net_cfg = net_cfg
        self.rule = rule
        self.epsilon = epsilon
        self.record = record
        self.outputs = None

    def reset(self, n_lanes):
        self.state = [net.initial_state(n_lanes) for net in self.nets]
        if self.record:
            n_out = self.nets[0].spec.n_out
            self.outputs = np.zeros((n_lanes, self.net_cfg.episode_len + 1, self.net_cfg.n_bs, n_out))

    def decide(self, bs, lanes, obs, u):
        x = features.local_con(
            obs.avg_rate, obs.signal_mw, obs.interference_mw, obs.energies_mw, obs.counter, self.net_cfg
        )
        h, c = self.state[bs]
        out, (h_new, c_new) = self.nets[bs].step(x, (h[lanes], c[lanes]))
        h[lanes] = h_new
        c[lanes] = c_new
        if self.record:
            self.outputs[lanes, obs.slot, bs] = out
        greedy = out[:, 1] >= out[:, 0]
        if self.rule == "sample":
            act = u < out[:, 1]
        elif self.rule == "greedy":
            act = greedy
        else:
            explore = u < self.epsilon
            act = np.where(explore, u < 0.5 * self.epsilon, greedy)
        return act.astype(np.int8)


# ---------------------------------------------------------------- features


@dataclass
class EpisodeFeatures:
    """Network inputs for every CON step (slots 1..L), time-major ``(L, M, ...)``."""

    local_con: np.ndarray  # (L, M, N, 3 + N + 1)
    local_eos: np.ndarray  # (L, M, N, 3)
    global_eos: np.ndarray  # (L, M, 3N)
    global_con: np.ndarray  # (L, M, N, 4N + 1)
    actions: np.ndarray  # (L, M, N)
    rewards: np.ndarray  # (L, M)

    def critic_inputs(self, bs: int, centralized: bool):
        """(CON critic input, EOS critic input) for one BS."""
        if centralized:
            return self.global_con[:, :, bs], self.global_eos
        return self.local_con[:, :, bs], self.local_eos[:, :, bs]


def episode_features(traj: Trajectory, net: NetworkConfig) -> EpisodeFeatures:
    x = traj.avg_rate[:, :-1]
    s = traj.signal_mw[:, :-1]
    i = traj.interference_mw[:, :-1]
    e = traj.energies_mw[:, 1:]
    theta = traj.counters[:, 1:]
    g_eos = features.global_eos(x, s, i, net)
    n = net.n_bs
    g_con = features.global_con(np.broadcast_to(g_eos[:, :, None, :], (*theta.shape, 3 * n)), e, theta, net)
    to_tm = lambda a: np.ascontiguousarray(np.swapaxes(a, 0, 1))  # noqa: E731
    return EpisodeFeatures(
        local_con=to_tm(features.local_con(x, s, i, e, theta, net)),
        local_eos=to_tm(features.local_eos(x, s, i, net)),
        global_eos=to_tm(g_eos),
        global_con=to_tm(g_con),
        actions=to_tm(traj.actions[:, 1:]),
        rewards=to_tm(traj.reward[:, 1:]),
    )


def build_critic_input(record, bs: int, centralized: bool, net: NetworkConfig):
    """Critic inputs ``(V^CON input, V^EOS input)`` for one :class:`SlotRecord` (slot >= 1)."""
    if record.obs_eos is None:
        raise ValueError("slot 0 has no observations")
    obs = record.obs_eos
    x, s, i = obs[:, 0], 10.0 ** (obs[:, 1] / 10.0), 10.0 ** (obs[:, 2] / 10.0)
    e = 10.0 ** (record.energies_dbm[bs] / 10.0)
    theta = record.counters[bs]
    if centralized:
        g_eos = features.global_eos(x, s, i, net)
        return features.global_con(g_eos, e, theta, net), g_eos
    con = features.local_con(x[bs], s[bs], i[bs], e, theta, net)
    return con, features.local_eos(x[bs], s[bs], i[bs], net)


# ---------------------------------------------------------------- evaluation


@dataclass
class EvalGrid:
    """Fixed validation set: ``configs x realizations`` episodes."""

    configs: list[Configuration]
    seeds: list[list[int]]

    @classmethod
    def build(cls, net: NetworkConfig, master_seed: int, n_configs: int = 15, n_realizations: int = 20) -> EvalGrid:
        configs = [sample_configuration(net, streams.seed_int(master_seed, "eval-config", c)) for c in range(n_configs)]
        seeds = [
            [streams.seed_int(master_seed, "eval-episode", c, r) for r in range(n_realizations)]
            for c in range(n_configs)
        ]
        return cls(configs, seeds)

    @property
    def n_episodes(self) -> int:
        return sum(len(row) for row in self.seeds)

    def lanes(self):
        cfgs = [c for c, row in zip(self.configs, self.seeds) for _ in row]
        return cfgs, [s for row in self.seeds for s in row]


@dataclass
class EvalResult:
    rewards: np.ndarray
    sum_rate_mbps: np.ndarray
    max_rate_mbps: np.ndarray
    final_avg_rate: np.ndarray

    @property
    def reward_mean(self) -> float:
        return float(self.rewards.mean())

    @property
    def reward_stderr(self) -> float:
        n = len(self.rewards)
        return float(self.rewards.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    @property
    def sum_rate_mean(self) -> float:
        return float(self.sum_rate_mbps.mean())

    @property
    def max_rate_mean(self) -> float:
        return float(self.max_rate_mbps.mean())


def evaluate_policy(decide, grid: EvalGrid, net: NetworkConfig, gamma: float) -> EvalResult:
    """Run a decision rule over the whole grid without recording slots."""
    cfgs, seeds = grid.lanes()
    traj = run_episodes(decide, net, cfgs, seeds, record=False)
    return EvalResult(
        rewards=traj.cumulative_reward(gamma),
        sum_rate_mbps=traj.sum_rate_mbps(),
        max_rate_mbps=traj.max_rate_mbps(),
        final_avg_rate=traj.final_avg_rate,
    )


def training_episodes(net: NetworkConfig, master_seed: int, iteration: int, n_batch: int):
    """Fresh configurations and episode seeds for one training iteration."""
    configs = [
        sample_configuration(net, streams.seed_int(master_seed, "train-config", iteration, b)) for b in range(n_batch)
    ]
    seeds = [streams.seed_int(master_seed, "train-episode", iteration, b) for b in range(n_batch)]
    return configs, seeds
