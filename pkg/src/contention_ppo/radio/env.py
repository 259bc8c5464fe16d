"""Slot-level downlink simulator: contention, rates, PF reward and episodes.

The episode runner is lane-batched: ``M`` independent episodes (each with its
own configuration and random stream) advance in lockstep. A lane's numbers
depend only on its own seed, never on which other lanes share the batch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelState, advance_fading, init_channel
from .config import Configuration, NetworkConfig

NOISE_BLOCK = 32


# ---------------------------------------------------------------- per-slot maths


def compute_rates(actions, g, net: NetworkConfig):
    """Signal, interference (mW) and spectral efficiency (bps/Hz) per UE.

    ``actions`` has shape ``(..., N)`` and ``g`` shape ``(..., N, N)`` with
    ``g[..., i, j]`` the gain BS i -> UE j; leading dims broadcast.
    """
    a = np.asarray(actions, dtype=np.float64)
    rx = net.tx_power_mw * a[..., :, None] * g
    n = rx.shape[-1]
    signal = np.diagonal(rx, axis1=-2, axis2=-1)
    interference = np.where(np.eye(n, dtype=bool), 0.0, rx).sum(axis=-2)
    sinr = signal / (interference + net.ue_noise_mw)
    return signal, interference, np.log2(1.0 + sinr)


def update_avg_rates(x_prev, r_inst, B: int, floor: float | None = None):
    """Exponential smoothing ``(1 - 1/B) x + r / B``, optionally clamped below."""
    x = (1.0 - 1.0 / B) * np.asarray(x_prev) + np.asarray(r_inst) / B
    return x if floor is None else np.maximum(x, floor)


def per_slot_reward(x_prev, r_inst, B: int):
    """Sum over UEs of ``log((1 - 1/B)(1 + R / ((B - 1) x_prev)))`` (natural log)."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    r_inst = np.asarray(r_inst, dtype=np.float64)
    return np.log((1.0 - 1.0 / B) * (1.0 + r_inst / ((B - 1) * x_prev))).sum(axis=-1)


def initial_avg_rates(r_inst, net: NetworkConfig):
    return np.maximum(r_inst, net.rate_floor)


def mw_to_dbm(mw, floor_dbm: float = -np.inf):
    mw = np.asarray(mw, dtype=np.float64)
    with np.errstate(divide="ignore"):
        dbm = 10.0 * np.log10(mw)
    return np.maximum(dbm, floor_dbm)


# ---------------------------------------------------------------- observations


@dataclass(frozen=True)
class UEState:
    avg_rate: np.ndarray
    signal_mw: np.ndarray
    interference_mw: np.ndarray
    inst_rate: np.ndarray

    @property
    def signal_dbm(self):
        return mw_to_dbm(self.signal_mw)

    @property
    def interference_dbm(self):
        return mw_to_dbm(self.interference_mw)


@dataclass(frozen=True)
class ConObservation:
    """What a BS sees when its counter expires.

    Fields are arrays over the lanes being decided (or scalars, for the
    single-episode helpers): the BS's own UE state from the previous slot, the
    energies it senses from each BS (mW, 0 if not sensed) and its counter.
    """

    avg_rate: np.ndarray
    signal_mw: np.ndarray
    interference_mw: np.ndarray
    energies_mw: np.ndarray
    counter: np.ndarray
    slot: int = 0

    def energies_dbm(self, net: NetworkConfig) -> np.ndarray:
        return mw_to_dbm(self.energies_mw, net.sensing_floor_dbm)

    def row(self, k: int) -> ConObservation:
        return ConObservation(
            avg_rate=self.avg_rate[k],
            signal_mw=self.signal_mw[k],
            interference_mw=self.interference_mw[k],
            energies_mw=self.energies_mw[k],
            counter=self.counter[k],
            slot=self.slot,
        )


class Policy:
    """Decentralised decision rule, called once per BS per slot per lane.

    ``decide`` receives the lanes in which BS ``bs`` acts in the current
    mini-slot, their observations and one uniform draw per lane (for
    stochastic rules), and returns 0/1 actions.
    """

    centralized = False

    def reset(self, n_lanes: int) -> None:
        pass

    def decide(self, bs: int, lanes: np.ndarray, obs: ConObservation, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class CentralScheduler:
    """Controller that sees every UE's average rate and every gain."""

    centralized = True

    def reset(self, n_lanes: int) -> None:
        pass

    def schedule(self, x_prev: np.ndarray, g: np.ndarray, net: NetworkConfig) -> np.ndarray:
        raise NotImplementedError


class FunctionPolicy(Policy):
    """Adapts ``fn(bs, obs) -> action`` (one lane at a time) to :class:`Policy`."""

    def __init__(self, fn: Callable[[int, ConObservation], int]):
        self.fn = fn

    def decide(self, bs, lanes, obs, u):
        return np.array([int(self.fn(bs, obs.row(k))) for k in range(len(lanes))], dtype=np.int8)


class ConstantPolicy(Policy):
    def __init__(self, action: int):
        self.action = int(action)

    def decide(self, bs, lanes, obs, u):
        return np.full(len(lanes), self.action, dtype=np.int8)


def as_policy(decide) -> Policy | CentralScheduler:
    if isinstance(decide, (Policy, CentralScheduler)):
        return decide
    if callable(decide):
        return FunctionPolicy(decide)
    raise TypeError(f"not a decision rule: {decide!r}")


# ---------------------------------------------------------------- contention


def _contend(theta, policy: Policy, g_bs, x_prev, s_prev, i_prev, u, net: NetworkConfig, slot: int):
    """Visit BSs in ascending counter order; ties share a mini-slot and do not sense each other."""
    m, n = theta.shape
    actions = np.zeros((m, n), dtype=np.int8)
    energies = np.zeros((m, n, n))
    p_tx = net.tx_power_mw
    for k in range(n):
        for i in range(n):
            lanes = np.flatnonzero(theta[:, i] == k)
            if lanes.size == 0:
                continue
            heard = (theta[lanes] < k) & (actions[lanes] == 1)
            e_mw = np.where(heard, p_tx * g_bs[lanes, :, i], 0.0)
            energies[lanes, i] = e_mw
            obs = ConObservation(
                avg_rate=x_prev[lanes, i],
                signal_mw=s_prev[lanes, i],
                interference_mw=i_prev[lanes, i],
                energies_mw=e_mw,
                counter=theta[lanes, i],
                slot=slot,
            )
            actions[lanes, i] = policy.decide(i, lanes, obs, u[lanes, i])
    return actions, energies


def run_contention(counters, decide, ch: ChannelState, ue: UEState, net: NetworkConfig, u=None):
    """One contention period for a single episode.

    Returns the action vector and each BS's observation at its decision time.
    """
    policy = as_policy(decide)
    theta = np.asarray(counters, dtype=np.int64)[None, :]
    n = theta.shape[1]
    if theta.min() < 0 or theta.max() > n - 1:
        raise ValueError(f"counters must lie in 0..{n - 1}, got {counters}")
    u = np.zeros((1, n)) if u is None else np.asarray(u, dtype=np.float64)[None, :]

    class _Capture(Policy):
        def __init__(self):
            self.seen: dict[int, ConObservation] = {}

        def decide(self, bs, lanes, obs, u_):
            self.seen[bs] = obs.row(0)
            return policy.decide(bs, lanes, obs, u_)

    capture = _Capture()
    actions, _ = _contend(
        theta,
        capture,
        ch.g_bs[None],
        np.asarray(ue.avg_rate)[None],
        np.asarray(ue.signal_mw)[None],
        np.asarray(ue.interference_mw)[None],
        u,
        net,
        slot=0,
    )
    return actions[0], [capture.seen[i] for i in range(n)]


# ---------------------------------------------------------------- episodes


class _LaneNoise:
    """Per-lane random draws for counters, policy uniforms and fading innovations."""

    def __init__(self, rngs: list[np.random.Generator], n: int):
        self.rngs = rngs
        self.n = n
        self.pairs = n * (n - 1) // 2
        self.block = -1

    def _draw(self, block: int):
        k, n, p = NOISE_BLOCK, self.n, self.pairs
        theta, u, e_ue, e_bs = [], [], [], []
        for r in self.rngs:
            theta.append(r.integers(0, n, size=(k, n)))
            u.append(r.random((k, n)))
            z = r.standard_normal((k, n, n, 2))
            e_ue.append((z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0))
            z = r.standard_normal((k, p, 2))
            e_bs.append((z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0))
        self.theta = np.stack(theta, axis=1)
        self.u = np.stack(u, axis=1)
        self.e_ue = np.stack(e_ue, axis=1)
        self.e_bs = np.stack(e_bs, axis=1)
        self.block = block

    def at(self, slot: int):
        block, off = divmod(slot - 1, NOISE_BLOCK)
        if block != self.block:
            self._draw(block)
        return self.theta[off], self.u[off], self.e_ue[off], self.e_bs[off]


@dataclass(frozen=True)
class SlotRecord:
    n: int
    counters: np.ndarray
    energies_dbm: np.ndarray
    actions: np.ndarray
    signal_dbm: np.ndarray
    interference_dbm: np.ndarray
    rate: np.ndarray
    avg_rate: np.ndarray
    reward: float
    obs_eos: np.ndarray | None
    obs_con: np.ndarray | None


@dataclass
class Trajectory:
    """A batch of ``M`` episodes of ``L + 1`` slots (slot 0 bootstraps the averages).

    Per-slot arrays have shape ``(M, L + 1, ...)`` and are ``None`` when the
    episodes were run without recording.
    """

    net: NetworkConfig
    seeds: list
    reward: np.ndarray
    final_avg_rate: np.ndarray
    counters: np.ndarray | None = None
    energies_mw: np.ndarray | None = field(default=None, repr=False)
    actions: np.ndarray | None = None
    signal_mw: np.ndarray | None = field(default=None, repr=False)
    interference_mw: np.ndarray | None = field(default=None, repr=False)
    rate: np.ndarray | None = field(default=None, repr=False)
    avg_rate: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_lanes(self) -> int:
        return self.reward.shape[0]

    @property
    def recorded(self) -> bool:
        return self.actions is not None

    def cumulative_reward(self, gamma: float = 1.0) -> np.ndarray:
        disc = gamma ** np.arange(self.reward.shape[1])
        return self.reward @ disc

    def sum_rate_mbps(self) -> np.ndarray:
        return self.net.bandwidth_hz * self.final_avg_rate.sum(axis=-1) / 1e6

    def max_rate_mbps(self) -> np.ndarray:
        return self.net.bandwidth_hz * self.final_avg_rate.max(axis=-1) / 1e6

    def records(self, lane: int = 0) -> list[SlotRecord]:
        if not self.recorded:
            raise ValueError("trajectory was generated without per-slot recording")
        net = self.net
        out = []
        for n in range(self.reward.shape[1]):
            e_dbm = mw_to_dbm(self.energies_mw[lane, n], net.sensing_floor_dbm)
            if n == 0:
                obs_eos = obs_con = None
            else:
                prev = (
                    self.avg_rate[lane, n - 1],
                    mw_to_dbm(self.signal_mw[lane, n - 1]),
                    mw_to_dbm(self.interference_mw[lane, n - 1]),
                )
                obs_eos = np.stack(prev, axis=-1)
                obs_con = np.concatenate(
                    [obs_eos, e_dbm, self.counters[lane, n][:, None].astype(np.float64)], axis=-1
                )
            out.append(
                SlotRecord(
                    n=n,
                    counters=self.counters[lane, n],
                    energies_dbm=e_dbm,
                    actions=self.actions[lane, n],
                    signal_dbm=mw_to_dbm(self.signal_mw[lane, n]),
                    interference_dbm=mw_to_dbm(self.interference_mw[lane, n]),
                    rate=self.rate[lane, n],
                    avg_rate=self.avg_rate[lane, n],
                    reward=float(self.reward[lane, n]),
                    obs_eos=obs_eos,
                    obs_con=obs_con,
                )
            )
        return out

    def to_csv(self, path, lane: int = 0) -> None:
        """One row per slot per BS, energies in dBm with the sensing floor."""
        n_bs = self.net.n_bs
        header = ["n", "bs", "theta"] + [f"E_{j}_dbm" for j in range(n_bs)]
        header += ["a", "S_dbm", "I_dbm", "R_bps_hz", "Xbar_bps_hz", "reward"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for rec in self.records(lane):
                for i in range(n_bs):
                    w.writerow(
                        [rec.n, i, int(rec.counters[i])]
                        + [repr(float(v)) for v in rec.energies_dbm[i]]
                        + [
                            int(rec.actions[i]),
                            repr(float(rec.signal_dbm[i])),
                            repr(float(rec.interference_dbm[i])),
                            repr(float(rec.rate[i])),
                            repr(float(rec.avg_rate[i])),
                            repr(rec.reward),
                        ]
                    )


def run_episodes(decide, net: NetworkConfig, configs: list[Configuration], seeds: list, *, record: bool = True) -> Trajectory:
    """Run one episode per (configuration, seed) pair in lockstep.

    Slot 0 has every BS transmit to seed the average rates. Each later slot
    steps the fading, draws counters, runs contention (or asks a central
    scheduler), then computes rates and reward and updates the averages.
    """
    if len(configs) != len(seeds):
        raise ValueError("need one seed per configuration")
    policy = as_policy(decide)
    m, n, L, B = len(configs), net.n_bs, net.episode_len, net.smoothing_window
    for c in configs:
        if c.n_bs != n:
            raise ValueError(f"configuration has {c.n_bs} BSs, network expects {n}")
    rngs = [np.random.default_rng(s) for s in seeds]
    ch = ChannelState.stack([init_channel(c, net, r) for c, r in zip(configs, rngs)])
    noise = _LaneNoise(rngs, n)

    rewards = np.empty((m, L + 1))
    if record:
        counters = np.zeros((m, L + 1, n), dtype=np.int8)
        energies = np.zeros((m, L + 1, n, n))
        actions_log = np.zeros((m, L + 1, n), dtype=np.int8)
        s_log, i_log, r_log, x_log = (np.empty((m, L + 1, n)) for _ in range(4))

    a = np.ones((m, n), dtype=np.int8)
    s, i, r_inst = compute_rates(a, ch.g, net)
    x = initial_avg_rates(r_inst, net)
    rewards[:, 0] = np.log(x).sum(axis=-1)
    if record:
        actions_log[:, 0], s_log[:, 0], i_log[:, 0], r_log[:, 0], x_log[:, 0] = a, s, i, r_inst, x

    policy.reset(m)
    for slot in range(1, L + 1):
        theta, u, e_ue, e_bs = noise.at(slot)
        ch = advance_fading(ch, e_ue, e_bs, net.fading_coeff)
        g = ch.g
        if policy.centralized:
            a = np.asarray(policy.schedule(x, g, net), dtype=np.int8)
            e_mw = np.zeros((m, n, n))
        else:
            a, e_mw = _contend(theta, policy, ch.g_bs, x, s, i, u, net, slot)
        s, i, r_inst = compute_rates(a, g, net)
        rewards[:, slot] = per_slot_reward(x, r_inst, B)
        x = update_avg_rates(x, r_inst, B)
        if record:
            counters[:, slot] = theta
            energies[:, slot] = e_mw
            actions_log[:, slot] = a
            s_log[:, slot], i_log[:, slot], r_log[:, slot], x_log[:, slot] = s, i, r_inst, x

    traj = Trajectory(net=net, seeds=list(seeds), reward=rewards, final_avg_rate=x)
    if record:
        traj.counters, traj.energies_mw, traj.actions = counters, energies, actions_log
        traj.signal_mw, traj.interference_mw, traj.rate, traj.avg_rate = s_log, i_log, r_log, x_log
    return traj


def generate_episode(decide, net: NetworkConfig, config: Configuration, seed, *, record: bool = True) -> Trajectory:
    """Single-episode convenience wrapper around :func:`run_episodes`."""
    return run_episodes(decide, net, [config], [seed], record=record)
