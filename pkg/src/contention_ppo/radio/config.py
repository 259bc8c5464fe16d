"""World description: radio constants, room geometry and UE drops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(RuntimeError):
    """UE placement could not satisfy the geometric constraints."""


MAX_PLACEMENT_ATTEMPTS = 1000

LAYOUTS = {
    "L1": {"rect_length_m": 20.0, "rect_width_m": 20.0},
    "L2": {"rect_length_m": 60.0, "rect_width_m": 20.0},
}


@dataclass(frozen=True)
class NetworkConfig:
    n_bs: int = 4
    rect_length_m: float = 20.0
    rect_width_m: float = 20.0
    bandwidth_hz: float = 20e6
    center_freq_ghz: float = 6.0
    noise_psd_dbm_hz: float = -174.0
    ue_noise_figure_db: float = 9.0
    bs_noise_figure_db: float = 5.0
    smoothing_window: int = 10
    fading_coeff: float = 0.1
    tx_power_dbm: float = 23.0
    episode_len: int = 2000
    min_link_dist_m: float = 1.0
    ue_drop_radius_m: float = 10.0
    rate_floor: float = 1e-3

    def __post_init__(self):
        if self.n_bs < 1:
            raise ValueError(f"n_bs must be >= 1, got {self.n_bs}")
        if self.smoothing_window < 2:
            raise ValueError(f"smoothing_window must be >= 2, got {self.smoothing_window}")
        if not 0.0 <= self.fading_coeff <= 1.0:
            raise ValueError(f"fading_coeff must lie in [0, 1], got {self.fading_coeff}")
        if self.episode_len < 1:
            raise ValueError(f"episode_len must be >= 1, got {self.episode_len}")
        if self.rect_length_m < 0 or self.rect_width_m < 0:
            raise ValueError("rectangle dimensions must be non-negative")
        if self.bandwidth_hz <= 0 or self.center_freq_ghz <= 0:
            raise ValueError("bandwidth and centre frequency must be positive")
        if self.min_link_dist_m <= 0 or self.ue_drop_radius_m <= 0:
            raise ValueError("min_link_dist_m and ue_drop_radius_m must be positive")
        if self.rate_floor <= 0:
            raise ValueError("rate_floor must be positive")

    @property
    def tx_power_mw(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0)

    def noise_dbm(self, noise_figure_db: float) -> float:
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz) + noise_figure_db

    @property
    def ue_noise_mw(self) -> float:
        return 10.0 ** (self.noise_dbm(self.ue_noise_figure_db) / 10.0)

    @property
    def sensing_floor_dbm(self) -> float:
        """Reported energy for a BS that senses nothing (BS thermal floor)."""
        return self.noise_dbm(self.bs_noise_figure_db)


def layout(name: str, **overrides) -> NetworkConfig:
    try:
        geometry = LAYOUTS[name]
    except KeyError:
        raise ValueError(f"unknown layout {name!r}; known: {sorted(LAYOUTS)}") from None
    return NetworkConfig(**{**geometry, **overrides})


@dataclass(frozen=True)
class Configuration:
    """BS and UE positions; UE j is served by BS j."""

    bs_positions: np.ndarray = field(repr=False)
    ue_positions: np.ndarray = field(repr=False)

    @property
    def n_bs(self) -> int:
        return len(self.bs_positions)

    def ue_distances(self) -> np.ndarray:
        """``d[i, j]`` = distance from BS i to UE j."""
        diff = self.bs_positions[:, None, :] - self.ue_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def bs_distances(self) -> np.ndarray:
        diff = self.bs_positions[:, None, :] - self.bs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def bs_positions(net: NetworkConfig) -> np.ndarray:
    """BS sites on the rectangle: the four corners for N=4.

    Other N fill two rows (y=0 and y=width) column by column with the columns
    spread evenly along the length.
    """
    n = net.n_bs
    ncols = max(1, math.ceil(n / 2))
    xs = np.linspace(0.0, net.rect_length_m, ncols) if ncols > 1 else np.zeros(1)
    sites = [(xs[k // 2], 0.0 if k % 2 == 0 else net.rect_width_m) for k in range(n)]
    return np.asarray(sites, dtype=np.float64)


def sample_configuration(net: NetworkConfig, seed) -> Configuration:
    """Corner BSs with one UE dropped uniformly in a disc around each BS.

    A drop is redrawn until it lies inside the room and at least
    ``min_link_dist_m`` from every BS.
    """
    rng = np.random.default_rng(seed)
    bs = bs_positions(net)
    if net.n_bs > 1:
        d_bs = np.hypot(*(bs[:, None, :] - bs[None, :, :]).transpose(2, 0, 1))
        d_bs = d_bs[~np.eye(net.n_bs, dtype=bool)]
        if d_bs.min() < net.min_link_dist_m:
            raise GeometryError("BS sites closer than min_link_dist_m")
    ues = np.empty_like(bs)
    for j in range(net.n_bs):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            radius = net.ue_drop_radius_m * math.sqrt(rng.random())
            angle = 2.0 * math.pi * rng.random()
            p = bs[j] + radius * np.array([math.cos(angle), math.sin(angle)])
            inside = 0.0 <= p[0] <= net.rect_length_m and 0.0 <= p[1] <= net.rect_width_m
            if inside and np.hypot(*(bs - p).T).min() >= net.min_link_dist_m:
                ues[j] = p
                break
        else:
            raise GeometryError(
                f"could not place UE {j} after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    return Configuration(bs_positions=bs, ue_positions=ues)
