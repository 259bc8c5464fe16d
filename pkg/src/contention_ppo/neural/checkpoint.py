"""Binary checkpoints of named networks and their Adam states.

Layout (all integers little-endian)::

    magic      8 bytes  b"CPPOCKPT"
    version    u32      currently 1
    meta_len   u32
    meta       meta_len bytes of UTF-8 JSON: {"nets": {name: {"spec": ..., "adam": ...|null}},
                                               "extra": {...}}
    n_records  u32
    n_records times:
        name_len u32, name (UTF-8), rank u32, dims rank x u64,
        data prod(dims) x float64 (little-endian, C order)

Tensor names are ``<net>/param/<p>``, ``<net>/adam_m/<p>`` and ``<net>/adam_v/<p>``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .adam import AdamState
from .net import NetSpec, RecurrentNet

MAGIC = b"CPPOCKPT"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


class CheckpointVersionError(CheckpointError):
    """Bad magic header or unsupported format version."""


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    """Tensors missing, unexpected or shaped differently from the stored architecture."""


def _record(name: str, arr: np.ndarray) -> bytes:
    raw = name.encode("utf-8")
    arr = np.ascontiguousarray(arr, dtype="<f8")
    head = struct.pack("<I", len(raw)) + raw + struct.pack("<I", arr.ndim)
    head += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.tobytes()


def save_checkpoint(path, nets: dict[str, RecurrentNet], opts: dict[str, AdamState] | None = None, extra: dict | None = None) -> None:
    opts = opts or {}
    meta = {
        "nets": {
            name: {"spec": net.spec.to_dict(), "adam": opts[name].scalars() if name in opts else None}
            for name, net in nets.items()
        },
        "extra": extra or {},
    }
    blobs = []
    for name, net in nets.items():
        for p, arr in net.params.items():
            blobs.append(_record(f"{name}/param/{p}", arr))
        if name in opts:
            for p in net.params:
                blobs.append(_record(f"{name}/adam_m/{p}", opts[name].m[p]))
                blobs.append(_record(f"{name}/adam_v/{p}", opts[name].v[p]))
    meta_raw = json.dumps(meta, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<II", VERSION, len(meta_raw)) + meta_raw
    body += struct.pack("<I", len(blobs)) + b"".join(blobs)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(body)
    tmp.replace(path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointTruncatedError(f"checkpoint ends at byte {len(self.data)}, needed {self.pos + n}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    """Returns ``(nets, opts, extra)``."""
    r = _Reader(Path(path).read_bytes())
    if len(r.data) < len(MAGIC) or r.data[: len(MAGIC)] != MAGIC:
        raise CheckpointVersionError(f"{path}: not a checkpoint (bad magic header)")
    r.take(len(MAGIC))
    version, meta_len = r.unpack("<II")
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, expected {VERSION}")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable metadata ({exc})") from None
    (n_records,) = r.unpack("<I")
    tensors = {}
    for _ in range(n_records):
        (name_len,) = r.unpack("<I")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<I")
        dims = r.unpack(f"<{rank}Q")
        count = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(dims).astype(np.float64)

    nets, opts = {}, {}
    expected = set()
    for name, entry in meta["nets"].items():
        spec = NetSpec(**entry["spec"])
        kinds = ["param"] + (["adam_m", "adam_v"] if entry["adam"] is not None else [])
        store = {kind: {} for kind in kinds}
        for p, shape in spec.shapes().items():
            for kind in kinds:
                key = f"{name}/{kind}/{p}"
                expected.add(key)
                if key not in tensors:
                    raise CheckpointShapeError(f"missing tensor {key}")
                if tensors[key].shape != shape:
                    raise CheckpointShapeError(f"{key}: stored shape {tensors[key].shape}, architecture needs {shape}")
                store[kind][p] = tensors[key]
        nets[name] = RecurrentNet(spec, store["param"])
        if entry["adam"] is not None:
            opts[name] = AdamState(**entry["adam"], m=store["adam_m"], v=store["adam_v"])
    unexpected = set(tensors) - expected
    if unexpected:
        raise CheckpointShapeError(f"unexpected tensors: {sorted(unexpected)[:3]}")
    return nets, opts, meta["extra"]


def tensor_sets(path) -> list[str]:
    """Distinct network names stored in a checkpoint."""
    return sorted(load_checkpoint(path)[0])
