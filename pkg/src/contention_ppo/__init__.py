"""Distributed two-state PPO for contention-based downlink spectrum access."""

__version__ = "0.1.0"
