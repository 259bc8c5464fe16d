"""Bounded neural-network inputs built from raw radio observations.

Powers and energies go to dBm, are clipped to [-120, 0] dBm and mapped onto
[-1, 1]. Average rates go through ``log2(X / rate_floor) / 20`` (clipped to
[-1, 1]) and contention counters through ``theta / (N - 1)``.
"""

from __future__ import annotations

import numpy as np

from .config import NetworkConfig

POWER_MIN_DBM = -120.0
POWER_MAX_DBM = 0.0
_POWER_MIN_MW = 10.0 ** (POWER_MIN_DBM / 10.0)
_MID = 0.5 * (POWER_MIN_DBM + POWER_MAX_DBM)
_HALF = 0.5 * (POWER_MAX_DBM - POWER_MIN_DBM)


def power_dbm(mw: np.ndarray) -> np.ndarray:
    """dBm with zero power mapped to ``POWER_MIN_DBM``."""
    return np.minimum(10.0 * np.log10(np.maximum(mw, _POWER_MIN_MW)), POWER_MAX_DBM)


def scale_dbm(dbm: np.ndarray) -> np.ndarray:
    return (np.clip(dbm, POWER_MIN_DBM, POWER_MAX_DBM) - _MID) / _HALF


def scale_power(mw: np.ndarray) -> np.ndarray:
    return scale_dbm(power_dbm(mw))


def scale_energy(mw: np.ndarray, net: NetworkConfig) -> np.ndarray:
    """Sensed energies, with unsensed entries reported at the sensing floor."""
    return scale_dbm(np.maximum(power_dbm(mw), net.sensing_floor_dbm))


def scale_rate(x: np.ndarray, net: NetworkConfig) -> np.ndarray:
    return np.clip(np.log2(x / net.rate_floor) / 20.0, -1.0, 1.0)


def scale_counter(theta: np.ndarray, net: NetworkConfig) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    return theta / (net.n_bs - 1) if net.n_bs > 1 else np.zeros_like(theta)


def local_eos(x_prev, s_prev, i_prev, net: NetworkConfig) -> np.ndarray:
    """``o_i^EOS``: one BS's own (avg rate, signal, interference); shape ``(..., 3)``."""
    return np.stack([scale_rate(x_prev, net), scale_power(s_prev), scale_power(i_prev)], axis=-1)


def local_con(x_prev, s_prev, i_prev, energies_mw, theta, net: NetworkConfig) -> np.ndarray:
    """``o_i^CON`` = (o_i^EOS, energies sensed by BS i, counter); shape ``(..., 3 + N + 1)``."""
    return np.concatenate(
        [
            local_eos(x_prev, s_prev, i_prev, net),
            scale_energy(energies_mw, net),
            scale_counter(theta, net)[..., None],
        ],
        axis=-1,
    )


def global_eos(x_prev, s_prev, i_prev, net: NetworkConfig) -> np.ndarray:
    """``s^EOS``: all UEs' rates, then signals, then interferences; shape ``(..., 3N)``."""
    return np.concatenate(
        [scale_rate(x_prev, net), scale_power(s_prev), scale_power(i_prev)], axis=-1
    )


def global_con(global_eos_feats, energies_mw, theta, net: NetworkConfig) -> np.ndarray:
    """Centralised CON critic input (s^EOS, energies at BS i, counter of BS i)."""
    return np.concatenate(
        [global_eos_feats, scale_energy(energies_mw, net), scale_counter(theta, net)[..., None]],
        axis=-1,
    )


def input_widths(n_bs: int, centralized: bool) -> dict[str, int]:
    """Input widths for the policy and the two critics."""
    con_local = 3 + n_bs + 1
    if centralized:
        return {"policy": con_local, "v_con": 3 * n_bs + n_bs + 1, "v_eos": 3 * n_bs}
    return {"policy": con_local, "v_con": con_local, "v_eos": 3}
