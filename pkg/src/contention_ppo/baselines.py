"""Non-learning reference policies: energy detect, adaptive ED and PF scheduling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .radio.config import Configuration, NetworkConfig
from .radio.channel import ChannelState
from .radio.env import CentralScheduler, Policy, compute_rates, run_episodes

DEFAULT_ED_DBM = -72.0
MAX_PF_BS = 20


def ed_decide(energies_dbm, threshold_dbm: float = DEFAULT_ED_DBM, floor_dbm: float | None = None) -> int:
    """Transmit iff the linear sum of sensed energies is below the threshold.

    Entries at or below ``floor_dbm`` count as "nothing sensed".
    """
    e = np.asarray(energies_dbm, dtype=np.float64)
    if floor_dbm is not None:
        e = e[e > floor_dbm]
    total_mw = np.sum(10.0 ** (e / 10.0))
    return int(total_mw < 10.0 ** (threshold_dbm / 10.0))


class EnergyDetect(Policy):
    def __init__(self, threshold_dbm: float = DEFAULT_ED_DBM):
        self.threshold_dbm = float(threshold_dbm)
        self._threshold_mw = 10.0 ** (self.threshold_dbm / 10.0)

    def decide(self, bs, lanes, obs, u):
        return (obs.energies_mw.sum(axis=-1) < self._threshold_mw).astype(np.int8)


def ed_sweep_thresholds(high_dbm: float = -22.0, low_dbm: float = -92.0, step_db: float = 5.0) -> list[float]:
    """Thresholds from ``high_dbm`` down to ``low_dbm`` inclusive."""
    count = int(round((high_dbm - low_dbm) / step_db)) + 1
    return [high_dbm - k * step_db for k in range(count)]


def ed_rewards(net: NetworkConfig, configs, seeds, thresholds, gamma: float) -> np.ndarray:
    """Cumulative reward per (threshold, lane); every threshold sees the same seeds."""
    out = np.empty((len(thresholds), len(configs)))
    for k, thr in enumerate(thresholds):
        traj = run_episodes(EnergyDetect(thr), net, configs, seeds, record=False)
        out[k] = traj.cumulative_reward(gamma)
    return out


def _best_threshold(mean_rewards: np.ndarray, thresholds) -> int:
    # argmax, ties to the more permissive (higher) threshold
    order = np.argsort(-np.asarray(thresholds, dtype=np.float64), kind="stable")
    return int(order[np.argmax(mean_rewards[order])])


def adaptive_ed(config: Configuration, thresholds, seeds, net: NetworkConfig, gamma: float = 1.0):
    """Genie-aided ED: the threshold with the best mean reward for this configuration.

    Returns ``(best_threshold_dbm, best_mean_reward)``.
    """
    if len(thresholds) == 0:
        raise ValueError("threshold set is empty")
    rewards = ed_rewards(net, [config] * len(seeds), list(seeds), thresholds, gamma).mean(axis=1)
    k = _best_threshold(rewards, thresholds)
    return float(thresholds[k]), float(rewards[k])


@dataclass
class SweepResult:
    thresholds: list[float]
    rewards: np.ndarray  # (threshold, config, realization)
    sum_rate_mbps: np.ndarray
    max_rate_mbps: np.ndarray

    def per_config_best(self) -> np.ndarray:
        means = self.rewards.mean(axis=2)
        return np.array([_best_threshold(means[:, c], self.thresholds) for c in range(means.shape[1])])

    def adaptive(self):
        """Per-lane reward, sum and max rate when each configuration uses its best threshold."""
        best = self.per_config_best()
        cols = np.arange(len(best))
        return self.rewards[best, cols], self.sum_rate_mbps[best, cols], self.max_rate_mbps[best, cols]


def sweep_ed(net: NetworkConfig, configs, seeds, thresholds, gamma: float) -> SweepResult:
    """Run every threshold on a ``configs x realizations`` grid (``seeds`` is C x R)."""
    n_cfg, n_real = len(configs), len(seeds[0])
    lanes_cfg = [c for c in configs for _ in range(n_real)]
    lanes_seed = [s for row in seeds for s in row]
    shape = (len(thresholds), n_cfg, n_real)
    rewards, sums, maxes = np.empty(shape), np.empty(shape), np.empty(shape)
    for k, thr in enumerate(thresholds):
        traj = run_episodes(EnergyDetect(thr), net, lanes_cfg, lanes_seed, record=False)
        rewards[k] = traj.cumulative_reward(gamma).reshape(n_cfg, n_real)
        sums[k] = traj.sum_rate_mbps().reshape(n_cfg, n_real)
        maxes[k] = traj.max_rate_mbps().reshape(n_cfg, n_real)
    return SweepResult(list(thresholds), rewards, sums, maxes)


# ---------------------------------------------------------------- PF scheduling


def candidate_actions(n: int) -> np.ndarray:
    """All 2^n action vectors, fewest transmitters first."""
    if n > MAX_PF_BS:
        raise ValueError(f"PF enumeration limited to {MAX_PF_BS} BSs, got {n}")
    vecs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    return vecs[np.argsort(vecs.sum(axis=1), kind="stable")]


def pf_metric(actions, x_bar, g, net: NetworkConfig):
    _, _, r = compute_rates(actions, g, net)
    return (r / x_bar).sum(axis=-1)


def _pf_batch(x_bar, g, net, cands):
    # x_bar (M, N), g (M, N, N) -> (M,) index into cands
    metric = pf_metric(cands[None], x_bar[:, None, :], g[:, None], net)
    return np.argmax(metric, axis=1)


def pf_schedule(x_bar, ch: ChannelState, net: NetworkConfig) -> np.ndarray:
    """Exhaustive argmax of ``sum_j R_j / X_j``; ties go to fewer transmitters."""
    n = net.n_bs
    cands = candidate_actions(n)
    x_bar = np.asarray(x_bar, dtype=np.float64)
    return cands[_pf_batch(x_bar[None], ch.g[None], net, cands)[0]].copy()


class ProportionalFair(CentralScheduler):
    def __init__(self, net: NetworkConfig):
        self.cands = candidate_actions(net.n_bs)

    def schedule(self, x_prev, g, net):
        return self.cands[_pf_batch(x_prev, g, net, self.cands)]
