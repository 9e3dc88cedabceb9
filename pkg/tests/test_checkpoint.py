import json
import struct
import zlib

import numpy as np
import pytest

from tgocr.checkpoint import (
    MAGIC,
    dumps_checkpoint,
    load_checkpoint,
    loads_checkpoint,
    read_manifest,
    save_checkpoint,
)
from tgocr.errors import CheckpointError
from tgocr.model import build_cnn, build_mlp


@pytest.fixture(scope="module")
def cnn_blob():
    return dumps_checkpoint(build_cnn(5))


@pytest.mark.parametrize("builder", [build_cnn, build_mlp])
def test_roundtrip_is_bit_exact(builder, tmp_path, rng):
    model = builder(9)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.architecture == model.architecture
    assert [l.config() for l in loaded.layers] == [l.config() for l in model.layers]
    for a, b in zip(model.param_layers(), loaded.param_layers()):
        assert a.params.weights.tobytes() == b.params.weights.tobytes()
        assert a.params.bias.tobytes() == b.params.bias.tobytes()
    x = rng.random((100, 1, 32, 32)).astype(np.float32)
    assert model.forward(x).tobytes() == loaded.forward(x).tobytes()


def test_manifest_contents(tmp_path):
    path = tmp_path / "c.ckpt"
    save_checkpoint(build_cnn(2), path)
    manifest = read_manifest(path)
    assert manifest["param_count"] == 75_383
    assert manifest["architecture"] == "cnn"
    assert manifest["format_version"] == 1
    assert manifest["seed"] == 2
    assert manifest["layers"][0]["params"][0] == {"name": "weights", "shape": [30, 1, 5, 5]}


def test_layout(cnn_blob):
    assert cnn_blob[:8] == b"TGOCRCK1"
    (n,) = struct.unpack_from("<I", cnn_blob, 8)
    assert len(cnn_blob) == 8 + 4 + n + 4 * 75_383 + 4
    (crc,) = struct.unpack_from("<I", cnn_blob, len(cnn_blob) - 4)
    assert crc == zlib.crc32(cnn_blob[:-4])


def test_serialization_is_deterministic():
    assert dumps_checkpoint(build_cnn(1)) == dumps_checkpoint(build_cnn(1))


def reseal(manifest: dict, params: bytes) -> bytes:
    raw = json.dumps(manifest).encode()
    body = MAGIC + struct.pack("<I", len(raw)) + raw + params
    return body + struct.pack("<I", zlib.crc32(body))


def split(blob):
    (n,) = struct.unpack_from("<I", blob, 8)
    return json.loads(blob[12 : 12 + n]), blob[12 + n : -4]


@pytest.mark.parametrize(
    "mutate, section",
    [
        (lambda b: b"XXXXXXXX" + b[8:], "magic"),
        (lambda b: b[:10], "manifest"),
        (lambda b: b[:200], "manifest"),
        (lambda b: b[: len(b) // 2], "parameters"),
        (lambda b: b[:-2], "checksum"),
        (lambda b: b[:-100] + bytes([b[-100] ^ 0xFF]) + b[-99:], "checksum"),
        (lambda b: b[:30] + bytes([b[30] ^ 0x01]) + b[31:], "checksum"),
        (lambda b: b + b"\0", "checksum"),
    ],
)
def test_corruption_is_detected(cnn_blob, mutate, section):
    with pytest.raises(CheckpointError) as info:
        loads_checkpoint(mutate(cnn_blob))
    assert info.value.section == section


def test_version_mismatch(cnn_blob):
    manifest, params = split(cnn_blob)
    manifest["format_version"] = 2
    with pytest.raises(CheckpointError) as info:
        loads_checkpoint(reseal(manifest, params))
    assert info.value.section == "version"


def test_bad_layer_in_manifest(cnn_blob):
    manifest, params = split(cnn_blob)
    manifest["layers"][1]["kind"] = "lstm"
    with pytest.raises(CheckpointError) as info:
        loads_checkpoint(reseal(manifest, params))
    assert info.value.section == "manifest"


def test_param_count_mismatch(cnn_blob):
    manifest, params = split(cnn_blob)
    manifest["param_count"] = 75_384
    with pytest.raises(CheckpointError) as info:
        loads_checkpoint(reseal(manifest, params))
    assert info.value.section == "parameters"


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.ckpt")
