"""Distributed two-state PPO: decentralised actors, (optionally) centralised critics.

Each BS owns a policy ``pi_CON`` and two critics ``V_CON`` / ``V_EOS``. A slot is
two half-steps, EOS -> CON (no reward) and CON -> next EOS (reward ``r[n]``),
each discounted by ``sqrt(gamma)`` so a full slot is discounted by ``gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams
from .neural import AdamState, NetSpec, RecurrentNet
from .radio import features
from .radio.config import NetworkConfig
from .radio.env import run_episodes
from .training import EpisodeFeatures, NetPolicy, TrainConfig, episode_features, training_episodes


@dataclass
class GaeBuffers:
    """Half-step TD errors, value targets and CON advantages, shaped ``(..., L)``."""

    delta_con: np.ndarray
    delta_eos: np.ndarray
    target_con: np.ndarray
    target_eos: np.ndarray
    adv_con: np.ndarray


def compute_two_state_targets(rewards, v_con, v_eos, gamma: float, lam: float) -> GaeBuffers:
    """GAE over the interleaved EOS/CON chain of one episode (last axis is time).

    The value beyond the final CON state is taken as zero.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    v_con = np.asarray(v_con, dtype=np.float64)
    v_eos = np.asarray(v_eos, dtype=np.float64)
    half = np.sqrt(gamma)
    next_eos = np.concatenate([v_eos[..., 1:], np.zeros_like(v_eos[..., :1])], axis=-1)
    delta_con = rewards + half * next_eos - v_con
    delta_eos = half * v_con - v_eos
    decay = half * lam
    a_con = np.empty_like(delta_con)
    a_eos = np.empty_like(delta_eos)
    acc = np.zeros(delta_con.shape[:-1])
    for t in range(delta_con.shape[-1] - 1, -1, -1):
        acc = delta_con[..., t] + decay * acc
        a_con[..., t] = acc
        acc = delta_eos[..., t] + decay * acc
        a_eos[..., t] = acc
    target_con = v_con + a_con
    target_eos = v_eos + a_eos
    return GaeBuffers(delta_con, delta_eos, target_con, target_eos, target_con - v_con)


@dataclass
class BSAgent:
    policy: RecurrentNet
    v_con: RecurrentNet
    v_eos: RecurrentNet
    opts: dict[str, AdamState]

    ROLES = ("pi_con", "v_con", "v_eos")

    def nets(self) -> dict[str, RecurrentNet]:
        return {"pi_con": self.policy, "v_con": self.v_con, "v_eos": self.v_eos}

    @classmethod
    def create(cls, net_cfg: NetworkConfig, cfg: TrainConfig, rng: np.random.Generator) -> BSAgent:
        widths = features.input_widths(net_cfg.n_bs, cfg.centralized_critic)
        size = dict(n_hidden=cfg.ppo_hidden, n_dense=cfg.dense_width)
        policy = RecurrentNet.create(
            NetSpec(widths["policy"], n_out=2, head="softmax", **size), rng, head_scale=cfg.policy_head_scale
        )
        v_con = RecurrentNet.create(NetSpec(widths["v_con"], n_out=1, head="linear", **size), rng)
        v_eos = RecurrentNet.create(NetSpec(widths["v_eos"], n_out=1, head="linear", **size), rng)
        nets = {"pi_con": policy, "v_con": v_con, "v_eos": v_eos}
        opts = {
            role: AdamState.for_params(
                net.params, cfg.lr, decay_factor=cfg.lr_decay_factor, decay_period=cfg.lr_decay_period
            )
            for role, net in nets.items()
        }
        return cls(policy, v_con, v_eos, opts)


@dataclass
class BSBatch:
    """One BS's training data, time-major ``(L, M, ...)``."""

    policy_in: np.ndarray
    v_con_in: np.ndarray
    v_eos_in: np.ndarray
    actions: np.ndarray
    old_prob: np.ndarray  # probability of the taken action under the behaviour policy
    rewards: np.ndarray

    @classmethod
    def from_features(cls, feats: EpisodeFeatures, behaviour_probs: np.ndarray, bs: int, centralized: bool) -> BSBatch:
        """``behaviour_probs`` is the actor's recorded output, shaped ``(M, L + 1, N, 2)``."""
        v_con_in, v_eos_in = feats.critic_inputs(bs, centralized)
        actions = feats.actions[:, :, bs].astype(np.int64)
        probs = np.swapaxes(behaviour_probs[:, 1:, bs], 0, 1)
        old = np.take_along_axis(probs, actions[..., None], axis=-1)[..., 0]
        return cls(feats.local_con[:, :, bs], v_con_in, v_eos_in, actions, old, feats.rewards)


@dataclass
class PPOLoss:
    objective: float
    clip: float
    v_con_mse: float
    v_eos_mse: float
    entropy: float
    targets: GaeBuffers


def _entropy(probs):
    logp = np.log(np.maximum(probs, 1e-300))
    return -(probs * logp).sum(axis=-1), logp


def ppo_loss_and_grads(agent: BSAgent, batch: BSBatch, cfg: TrainConfig, targets: GaeBuffers | None = None):
    """Objective ``L_CLIP - c1 MSE(V_CON) + c2 H[pi] - c3 MSE(V_EOS)`` and its gradients.

    Returned gradients are of the *negated* objective (ready for a descent
    optimiser). Targets are bootstrapped from the current critics unless given;
    either way they are treated as constants.
    """
    vc_out, vc_cache = agent.v_con.forward(batch.v_con_in)
    ve_out, ve_cache = agent.v_eos.forward(batch.v_eos_in)
    vc, ve = vc_out[..., 0], ve_out[..., 0]
    if targets is None:
        buf = compute_two_state_targets(batch.rewards.T, vc.T, ve.T, cfg.gamma, cfg.gae_lambda)
        targets = GaeBuffers(*(np.ascontiguousarray(a.T) for a in (
            buf.delta_con, buf.delta_eos, buf.target_con, buf.target_eos, buf.adv_con)))
    adv = targets.adv_con
    if cfg.normalize_advantages and adv.size > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    probs, pi_cache = agent.policy.forward(batch.policy_in)
    count = batch.actions.size
    p_taken = np.take_along_axis(probs, batch.actions[..., None], axis=-1)[..., 0]
    ratio = p_taken / batch.old_prob
    plain = ratio * adv
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv
    l_clip = np.minimum(plain, clipped).mean()
    ent, logp = _entropy(probs)
    ent_mean = ent.mean()

    d_ratio = np.where(plain <= clipped, adv, 0.0)
    dprob = cfg.c2 * -(logp + 1.0) / count
    np.put_along_axis(
        dprob,
        batch.actions[..., None],
        np.take_along_axis(dprob, batch.actions[..., None], axis=-1) + (d_ratio / batch.old_prob / count)[..., None],
        axis=-1,
    )
    g_pi = agent.policy.backward(-dprob, pi_cache)

    err_con = vc - targets.target_con
    err_eos = ve - targets.target_eos
    g_vc = agent.v_con.backward((2.0 * cfg.c1 * err_con / count)[..., None], vc_cache)
    g_ve = agent.v_eos.backward((2.0 * cfg.c3 * err_eos / count)[..., None], ve_cache)
    mse_con = float(np.mean(err_con**2))
    mse_eos = float(np.mean(err_eos**2))
    objective = float(l_clip - cfg.c1 * mse_con + cfg.c2 * ent_mean - cfg.c3 * mse_eos)
    loss = PPOLoss(objective, float(l_clip), mse_con, mse_eos, float(ent_mean), targets)
    return loss, {"pi_con": g_pi, "v_con": g_vc, "v_eos": g_ve}


class PPOTrainer:
    algorithm = "ppo"

    def __init__(self, net_cfg: NetworkConfig, cfg: TrainConfig, seed: int, agents: list[BSAgent] | None = None, iteration: int = 0):
        self.net_cfg = net_cfg
        self.cfg = cfg
        self.seed = int(seed)
        self.iteration = iteration
        self.agents = agents or [
            BSAgent.create(net_cfg, cfg, streams.rng(self.seed, "init", "ppo", i)) for i in range(net_cfg.n_bs)
        ]

    def behaviour_policy(self) -> NetPolicy:
        return NetPolicy([a.policy for a in self.agents], self.net_cfg, rule="sample", record=True)

    def greedy_policy(self) -> NetPolicy:
        return NetPolicy([a.policy for a in self.agents], self.net_cfg, rule="greedy")

    def train_iteration(self) -> dict:
        """Generate ``n_batch`` sampled episodes, then one full-batch ascent step per BS."""
        configs, seeds = training_episodes(self.net_cfg, self.seed, self.iteration, self.cfg.n_batch)
        actor = self.behaviour_policy()
        traj = run_episodes(actor, self.net_cfg, configs, seeds)
        feats = episode_features(traj, self.net_cfg)
        behaviour_entropy, _ = _entropy(actor.outputs[:, 1:])
        lr = self.agents[0].opts["pi_con"].effective_lr
        losses = []
        for i, agent in enumerate(self.agents):
            batch = BSBatch.from_features(feats, actor.outputs, i, self.cfg.centralized_critic)
            loss, grads = ppo_loss_and_grads(agent, batch, self.cfg)
            for role, net in agent.nets().items():
                agent.opts[role].apply(net.params, grads[role])
            losses.append(loss)
        self.iteration += 1
        return {
            "iteration": self.iteration,
            "reward_mean": float(traj.cumulative_reward(self.cfg.gamma).mean()),
            "entropy": float(behaviour_entropy.mean()),
            "loss_clip": float(np.mean([l.clip for l in losses])),
            "loss_con": float(np.mean([l.v_con_mse for l in losses])),
            "loss_eos": float(np.mean([l.v_eos_mse for l in losses])),
            "objective": float(np.mean([l.objective for l in losses])),
            "lr": lr,
        }

    # checkpoint plumbing

    def named_nets(self):
        nets, opts = {}, {}
        for i, agent in enumerate(self.agents):
            for role, net in agent.nets().items():
                nets[f"bs{i}/{role}"] = net
                opts[f"bs{i}/{role}"] = agent.opts[role]
        return nets, opts

    @classmethod
    def from_named_nets(cls, net_cfg, cfg, seed, nets, opts, iteration):
        agents = []
        for i in range(net_cfg.n_bs):
            key = f"bs{i}/"
            agents.append(
                BSAgent(
                    nets[key + "pi_con"],
                    nets[key + "v_con"],
                    nets[key + "v_eos"],
                    {role: opts[key + role] for role in BSAgent.ROLES},
                )
            )
        return cls(net_cfg, cfg, seed, agents=agents, iteration=iteration)
