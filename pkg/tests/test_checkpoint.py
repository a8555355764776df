"""Checkpoint manifest + blob round-trips."""

import json

import numpy as np
import pytest

from patternsdf.nn import CheckpointError, load_checkpoint, parameter, save_checkpoint


def test_round_trip_float64_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "encoder.stage1.w": parameter(rng.normal(size=(4, 2, 3, 3))),
        "sdf.head_a.b": parameter(rng.normal(size=(7,))),
    }
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, tensors, step=42, extra={"epoch": 3})
    back, step, extra = load_checkpoint(path)
    assert step == 42
    assert extra == {"epoch": 3}
    assert set(back) == set(tensors)
    for name, t in tensors.items():
        np.testing.assert_array_equal(back[name], t.data)
        assert back[name].dtype == np.float64


def test_round_trip_float32(tmp_path):
    arr = np.random.default_rng(1).normal(size=(3, 5)).astype(np.float32)
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, {"w": arr}, step=1)
    back, _, _ = load_checkpoint(path)
    np.testing.assert_array_equal(back["w"], arr)
    assert back["w"].dtype == np.float32


def test_manifest_is_json_with_names_and_shapes(tmp_path):
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, {"a.b": np.zeros((2, 3))}, step=7)
    manifest = json.loads(path.read_text())
    assert manifest["version"] == 1
    assert manifest["step"] == 7
    entry = manifest["tensors"][0]
    assert entry["name"] == "a.b"
    assert entry["shape"] == [2, 3]
    assert (tmp_path / "ckpt.json.bin").exists()


def test_corrupt_blob_raises(tmp_path):
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, {"w": np.zeros(8)}, step=0)
    blob_path = tmp_path / "ckpt.json.bin"
    blob_path.write_bytes(blob_path.read_bytes()[:-4])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
