"""Distributed two-state DQN comparison baseline.

Per BS: ``Q_CON`` (two action values, local CON observation) and ``Q_EOS``
(scalar, fed ``s^EOS`` when the centralised flag is set), each with a
hard-copied target network. Every iteration trains on ``n_batch`` fresh
epsilon-greedy episodes instead of a replay memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams
from .neural import AdamState, NetSpec, RecurrentNet
from .radio import features
from .radio.config import NetworkConfig
from .radio.env import run_episodes
from .training import NetPolicy, TrainConfig, episode_features, training_episodes


def q_targets(rewards, q_eos_target_next, q_con_target, gamma: float):
    """Regression targets along the last (time) axis.

    ``q_eos_target_next[..., t]`` is the target EOS value of slot ``t`` (the
    successor of CON step ``t - 1``); ``q_con_target`` has a trailing axis of
    two action values. Returns ``(y_con, y_eos)``.
    """
    half = np.sqrt(gamma)
    rewards = np.asarray(rewards, dtype=np.float64)
    succ = np.concatenate([q_eos_target_next[..., 1:], np.zeros_like(q_eos_target_next[..., :1])], axis=-1)
    y_con = rewards + half * succ
    y_eos = half * np.max(q_con_target, axis=-1)
    return y_con, y_eos


def _huber_grad(err, delta):
    return np.clip(err, -delta, delta)


def _huber(err, delta):
    a = np.abs(err)
    return np.where(a <= delta, 0.5 * err**2, delta * (a - 0.5 * delta))


def epsilon_at(cfg: TrainConfig, iteration: int) -> float:
    """Linear decay from ``eps_start`` to ``eps_end`` over the first ``eps_decay_frac`` of training."""
    horizon = max(1.0, cfg.eps_decay_frac * cfg.iterations)
    frac = min(1.0, iteration / horizon)
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


@dataclass
class DQNAgent:
    q_con: RecurrentNet
    q_eos: RecurrentNet
    q_con_target: RecurrentNet
    q_eos_target: RecurrentNet
    opts: dict[str, AdamState]

    @classmethod
    def create(cls, net_cfg: NetworkConfig, cfg: TrainConfig, rng: np.random.Generator) -> DQNAgent:
        widths = features.input_widths(net_cfg.n_bs, cfg.centralized_critic)
        size = dict(n_hidden=cfg.dqn_hidden, n_dense=cfg.dense_width, head="linear")
        q_con = RecurrentNet.create(NetSpec(widths["policy"], n_out=2, **size), rng)
        q_eos = RecurrentNet.create(NetSpec(widths["v_eos"], n_out=1, **size), rng)
        opts = {
            role: AdamState.for_params(
                net.params, cfg.lr, decay_factor=cfg.lr_decay_factor, decay_period=cfg.lr_decay_period
            )
            for role, net in (("q_con", q_con), ("q_eos", q_eos))
        }
        return cls(q_con, q_eos, q_con.copy(), q_eos.copy(), opts)

    def nets(self) -> dict[str, RecurrentNet]:
        return {
            "q_con": self.q_con,
            "q_eos": self.q_eos,
            "q_con_target": self.q_con_target,
            "q_eos_target": self.q_eos_target,
        }

    def sync_targets(self) -> None:
        self.q_con_target = self.q_con.copy()
        self.q_eos_target = self.q_eos.copy()


def dqn_loss_and_grads(agent: DQNAgent, con_in, eos_in, actions, rewards, cfg: TrainConfig):
    """Mean Huber Bellman error for both nets; inputs are time-major ``(L, M, ...)``."""
    tgt_con, _ = agent.q_con_target.forward(con_in)
    tgt_eos, _ = agent.q_eos_target.forward(eos_in)
    y_con, y_eos = q_targets(rewards.T, tgt_eos[..., 0].T, np.swapaxes(tgt_con, 0, 1), cfg.gamma)
    y_con, y_eos = y_con.T, y_eos.T

    q_con, con_cache = agent.q_con.forward(con_in)
    q_eos, eos_cache = agent.q_eos.forward(eos_in)
    count = actions.size
    q_taken = np.take_along_axis(q_con, actions[..., None], axis=-1)[..., 0]
    err_con = q_taken - y_con
    err_eos = q_eos[..., 0] - y_eos
    d_con = np.zeros_like(q_con)
    np.put_along_axis(d_con, actions[..., None], (_huber_grad(err_con, cfg.huber_delta) / count)[..., None], axis=-1)
    grads = {
        "q_con": agent.q_con.backward(d_con, con_cache),
        "q_eos": agent.q_eos.backward((_huber_grad(err_eos, cfg.huber_delta) / count)[..., None], eos_cache),
    }
    losses = {
        "q_con": float(_huber(err_con, cfg.huber_delta).mean()),
        "q_eos": float(_huber(err_eos, cfg.huber_delta).mean()),
    }
    return losses, grads


class DQNTrainer:
    algorithm = "dqn"

    def __init__(self, net_cfg: NetworkConfig, cfg: TrainConfig, seed: int, agents: list[DQNAgent] | None = None, iteration: int = 0):
        self.net_cfg = net_cfg
        self.cfg = cfg
        self.seed = int(seed)
        self.iteration = iteration
        self.agents = agents or [
            DQNAgent.create(net_cfg, cfg, streams.rng(self.seed, "init", "dqn", i)) for i in range(net_cfg.n_bs)
        ]

    def behaviour_policy(self, epsilon: float) -> NetPolicy:
        return NetPolicy([a.q_con for a in self.agents], self.net_cfg, rule="epsilon", epsilon=epsilon)

    def greedy_policy(self) -> NetPolicy:
        return NetPolicy([a.q_con for a in self.agents], self.net_cfg, rule="greedy")

    def train_iteration(self) -> dict:
        eps = epsilon_at(self.cfg, self.iteration)
        configs, seeds = training_episodes(self.net_cfg, self.seed, self.iteration, self.cfg.n_batch)
        traj = run_episodes(self.behaviour_policy(eps), self.net_cfg, configs, seeds)
        feats = episode_features(traj, self.net_cfg)
        lr = self.agents[0].opts["q_con"].effective_lr
        all_losses = []
        for i, agent in enumerate(self.agents):
            eos_in = feats.global_eos if self.cfg.centralized_critic else feats.local_eos[:, :, i]
            actions = feats.actions[:, :, i].astype(np.int64)
            losses, grads = dqn_loss_and_grads(agent, feats.local_con[:, :, i], eos_in, actions, feats.rewards, self.cfg)
            agent.opts["q_con"].apply(agent.q_con.params, grads["q_con"])
            agent.opts["q_eos"].apply(agent.q_eos.params, grads["q_eos"])
            all_losses.append(losses)
        self.iteration += 1
        if self.iteration % self.cfg.target_every == 0:
            for agent in self.agents:
                agent.sync_targets()
        return {
            "iteration": self.iteration,
            "reward_mean": float(traj.cumulative_reward(self.cfg.gamma).mean()),
            "entropy": None,
            "loss_clip": None,
            "loss_con": float(np.mean([l["q_con"] for l in all_losses])),
            "loss_eos": float(np.mean([l["q_eos"] for l in all_losses])),
            "lr": lr,
            "epsilon": eps,
        }

    def named_nets(self):
        nets, opts = {}, {}
        for i, agent in enumerate(self.agents):
            for role, net in agent.nets().items():
                nets[f"bs{i}/{role}"] = net
                if role in agent.opts:
                    opts[f"bs{i}/{role}"] = agent.opts[role]
        return nets, opts

    @classmethod
    def from_named_nets(cls, net_cfg, cfg, seed, nets, opts, iteration):
        agents = []
        for i in range(net_cfg.n_bs):
            k = f"bs{i}/"
            agents.append(
                DQNAgent(
                    nets[k + "q_con"],
                    nets[k + "q_eos"],
                    nets[k + "q_con_target"],
                    nets[k + "q_eos_target"],
                    {"q_con": opts[k + "q_con"], "q_eos": opts[k + "q_eos"]},
                )
            )
        return cls(net_cfg, cfg, seed, agents=agents, iteration=iteration)
