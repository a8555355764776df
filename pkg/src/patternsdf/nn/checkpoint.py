"""Checkpoints: JSON manifest plus a raw little-endian blob file.

The manifest records tensor names, shapes, dtypes, byte offsets, and the
optimizer step; values live in `<path>.bin` in manifest order. Blobs keep the
training dtype (float32 runs stay float32, float64 runs round-trip exactly).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor


class CheckpointError(ValueError):
    pass


_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def save_checkpoint(path, tensors: dict, step: int = 0, extra: dict = None) -> None:
    """Write named tensors (Tensor or ndarray values) and metadata."""
    path = Path(path)
    entries = []
    blob = bytearray()
    for name in sorted(tensors):
        value = tensors[name]
        data = np.asarray(value.data if isinstance(value, Tensor) else value)
        dtype = "<f8" if data.dtype == np.float64 else "<f4"
        raw = data.astype(dtype).tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(data.shape),
                "dtype": dtype,
                "offset": len(blob),
                "nbytes": len(raw),
            }
        )
        blob.extend(raw)
    manifest = {"version": 1, "step": int(step), "tensors": entries,
                "extra": extra or {}}
    path.write_text(json.dumps(manifest, indent=1))
    path.with_suffix(path.suffix + ".bin").write_bytes(bytes(blob))


def load_checkpoint(path):
    """Returns (tensors: {name: ndarray}, step, extra)."""
    path = Path(path)
    manifest = json.loads(path.read_text())
    if manifest.get("version") != 1:
        raise CheckpointError(f"unsupported checkpoint version in {path}")
    blob = path.with_suffix(path.suffix + ".bin").read_bytes()
    tensors = {}
    for entry in manifest["tensors"]:
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"unknown dtype {entry['dtype']!r} in {path}")
        start = entry["offset"]
        raw = blob[start : start + entry["nbytes"]]
        expect = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        if len(raw) % dtype.itemsize:
            raise CheckpointError(f"truncated blob for tensor {entry['name']} in {path}")
        arr = np.frombuffer(raw, dtype=dtype)
        if arr.size != expect:
            raise CheckpointError(
                f"tensor {entry['name']} has {arr.size} values, expected {expect}"
            )
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return tensors, int(manifest["step"]), manifest.get("extra", {})
