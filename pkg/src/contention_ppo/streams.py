"""Named random streams derived from one master seed.

Every random draw in a run comes from a stream addressed by a tuple of names,
e.g. ``("train-episode", iteration, actor)``. Streams are independent of each
other and of evaluation order, so batching or parallelism cannot perturb the
numbers a given episode sees.
"""

from __future__ import annotations

import zlib

import numpy as np


def _token(name: int | str) -> int:
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError(f"stream index must be non-negative, got {name}")
        return int(name)
    return zlib.crc32(str(name).encode("utf-8"))


def stream(master: int, *names: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_token(n) for n in names))


def rng(master: int, *names: int | str) -> np.random.Generator:
    return np.random.default_rng(stream(master, *names))


def seed_int(master: int, *names: int | str) -> int:
    """A 63-bit integer seed for the named stream (handy for CSVs and metadata)."""
    return int(stream(master, *names).generate_state(1, np.uint64)[0] >> np.uint64(1))
