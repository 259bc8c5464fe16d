"""Multi-BS downlink contention simulator."""

from .channel import ChannelState, advance_fading, init_channel, path_gain_db, stationary_power, step_fading
from .config import LAYOUTS, Configuration, GeometryError, NetworkConfig, layout, sample_configuration
from .env import (
    CentralScheduler,
    ConObservation,
    ConstantPolicy,
    FunctionPolicy,
    Policy,
    SlotRecord,
    Trajectory,
    UEState,
    compute_rates,
    generate_episode,
    mw_to_dbm,
    per_slot_reward,
    run_contention,
    run_episodes,
    update_avg_rates,
)

__all__ = [
    "LAYOUTS",
    "CentralScheduler",
    "ChannelState",
    "ConObservation",
    "Configuration",
    "ConstantPolicy",
    "FunctionPolicy",
    "GeometryError",
    "NetworkConfig",
    "Policy",
    "SlotRecord",
    "Trajectory",
    "UEState",
    "advance_fading",
    "compute_rates",
    "generate_episode",
    "init_channel",
    "layout",
    "mw_to_dbm",
    "path_gain_db",
    "per_slot_reward",
    "run_contention",
    "run_episodes",
    "sample_configuration",
    "stationary_power",
    "step_fading",
    "update_avg_rates",
]
