"""Self-describing checkpoint container: named float64 arrays plus a small
JSON metadata block, little-endian, with magic header and version byte."""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"SCDK"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path: str, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([VERSION]))
        f.write(struct.pack("<I", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            a = np.ascontiguousarray(arr, dtype="<f8")
            if a.ndim != 2:
                raise CheckpointError(f"array {name!r} is not 2-D")
            name_b = name.encode("utf-8")
            f.write(struct.pack("<H", len(name_b)))
            f.write(name_b)
            f.write(struct.pack("<II", a.shape[0], a.shape[1]))
            f.write(a.tobytes())


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise CheckpointError("bad magic header")
        version = f.read(1)
        if not version or version[0] != VERSION:
            raise CheckpointError(f"unsupported version {version!r}")
        (meta_len,) = struct.unpack("<I", f.read(4))
        meta = json.loads(f.read(meta_len).decode("utf-8"))
        (count,) = struct.unpack("<I", f.read(4))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", f.read(2))
            name = f.read(name_len).decode("utf-8")
            rows, cols = struct.unpack("<II", f.read(8))
            buf = f.read(rows * cols * 8)
            if len(buf) != rows * cols * 8:
                raise CheckpointError(f"truncated data for array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(rows, cols).copy()
    return arrays, meta
