"""Path loss and temporally correlated Rayleigh fading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Configuration, NetworkConfig


def path_gain_db(dist_m, net: NetworkConfig):
    """Negated InH-Office LOS path loss, ``-(32.4 + 17.3 log10 d + 20 log10 fc)``."""
    d = np.asarray(dist_m, dtype=np.float64)
    if np.any(d < net.min_link_dist_m):
        raise ValueError(
            f"link distance {float(d.min()):.3f} m below minimum {net.min_link_dist_m} m"
        )
    pl = 32.4 + 17.3 * np.log10(d) + 20.0 * np.log10(net.center_freq_ghz)
    return -pl if pl.ndim else float(-pl)


def stationary_power(alpha: float) -> float:
    """Long-run E|h|^2 of ``h[n] = (1-a) h[n-1] + a e[n]`` with unit-power ``e``.

    ``alpha = 0`` has no stationary law; the static channel keeps unit power.
    """
    if alpha == 0.0:
        return 1.0
    return alpha**2 / (1.0 - (1.0 - alpha) ** 2)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian with unit variance."""
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _symmetric(upper: np.ndarray, n: int) -> np.ndarray:
    """Fill an ``(..., n, n)`` symmetric matrix, zero diagonal, from its upper triangle."""
    out = np.zeros((*upper.shape[:-1], n, n), dtype=upper.dtype)
    iu = np.triu_indices(n, k=1)
    out[..., iu[0], iu[1]] = upper
    out[..., iu[1], iu[0]] = upper
    return out


@dataclass
class ChannelState:
    """Per-link path gains and complex fading amplitudes.

    Arrays may carry leading lane dimensions. ``pg_ue[..., i, j]`` is the linear
    path gain BS i -> UE j; ``pg_bs`` is the symmetric BS <-> BS counterpart with
    an unused zero diagonal.
    """

    pg_ue: np.ndarray
    pg_bs: np.ndarray
    h_ue: np.ndarray
    h_bs: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return self.pg_ue * np.abs(self.h_ue) ** 2

    @property
    def g_bs(self) -> np.ndarray:
        return self.pg_bs * np.abs(self.h_bs) ** 2

    @staticmethod
    def stack(states: list[ChannelState]) -> ChannelState:
        return ChannelState(
            pg_ue=np.stack([s.pg_ue for s in states]),
            pg_bs=np.stack([s.pg_bs for s in states]),
            h_ue=np.stack([s.h_ue for s in states]),
            h_bs=np.stack([s.h_bs for s in states]),
        )


def init_channel(config: Configuration, net: NetworkConfig, rng: np.random.Generator) -> ChannelState:
    """Path gains from geometry, fading drawn from its stationary law."""
    n = config.n_bs
    pg_ue = 10.0 ** (path_gain_db(config.ue_distances(), net) / 10.0)
    d_bs = config.bs_distances()
    iu = np.triu_indices(n, k=1)
    pg_bs = _symmetric(10.0 ** (np.asarray(path_gain_db(d_bs[iu], net)) / 10.0), n)
    scale = np.sqrt(stationary_power(net.fading_coeff))
    h_ue = scale * complex_normal(rng, (n, n))
    h_bs = _symmetric(scale * complex_normal(rng, (len(iu[0]),)), n)
    return ChannelState(pg_ue=pg_ue, pg_bs=pg_bs, h_ue=h_ue, h_bs=h_bs)


def advance_fading(ch: ChannelState, e_ue: np.ndarray, e_bs_upper: np.ndarray, alpha: float) -> ChannelState:
    """One Gauss-Markov step given pre-drawn innovations."""
    n = ch.h_ue.shape[-1]
    return ChannelState(
        pg_ue=ch.pg_ue,
        pg_bs=ch.pg_bs,
        h_ue=(1.0 - alpha) * ch.h_ue + alpha * e_ue,
        h_bs=(1.0 - alpha) * ch.h_bs + alpha * _symmetric(e_bs_upper, n),
    )


def step_fading(ch: ChannelState, net: NetworkConfig, rng: np.random.Generator) -> ChannelState:
    n = ch.h_ue.shape[-1]
    lead = ch.h_ue.shape[:-2]
    e_ue = complex_normal(rng, (*lead, n, n))
    e_bs = complex_normal(rng, (*lead, n * (n - 1) // 2))
    return advance_fading(ch, e_ue, e_bs, net.fading_coeff)
