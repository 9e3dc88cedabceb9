"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"TGOCRCK1"                     8-byte magic
    uint32 n                        manifest length in bytes
    n bytes                         UTF-8 JSON manifest
    float32[...]                    parameter tensors, manifest order, row-major
    uint32                          CRC-32 of every preceding byte

The manifest records the format version, architecture tag, input shape, seed,
total parameter count and, per layer, its constructor config plus the name and
shape of each parameter tensor. Dense weights are stored as (n_out, n_in) and
conv kernels as (C_out, C_in, kH, kW), cross-correlation convention.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .errors import CheckpointError, OutputError
from .layers import layer_from_config
from .model import SequentialModel

MAGIC = b"TGOCRCK1"
FORMAT_VERSION = 1
_LEN = struct.Struct("<I")
_STORE_DTYPE = np.dtype("<f4")


def atomic_write(path, payload: bytes | str) -> None:
    """Write ``payload`` to ``path`` through a temp file and rename."""
    path = Path(path)
    mode = "wb" if isinstance(payload, bytes) else "w"
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, mode) as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _manifest(model: SequentialModel) -> dict:
    layers = []
    for layer in model.layers:
        entry = layer.config()
        if layer.params is not None:
            entry["params"] = [
                {"name": name, "shape": list(t.shape)} for name, t in layer.params.tensors()
            ]
        layers.append(entry)
    return {
        "format_version": FORMAT_VERSION,
        "architecture": model.architecture,
        "input_shape": list(model.input_shape),
        "num_classes": model.num_classes,
        "seed": model.seed,
        "param_count": model.param_count(),
        "layers": layers,
    }


def dumps_checkpoint(model: SequentialModel) -> bytes:
    manifest = json.dumps(_manifest(model), sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, _LEN.pack(len(manifest)), manifest]
    for layer in model.param_layers():
        for _, t in layer.params.tensors():
            parts.append(np.ascontiguousarray(t, dtype=_STORE_DTYPE).tobytes())
    body = b"".join(parts)
    return body + _LEN.pack(zlib.crc32(body))


def save_checkpoint(model: SequentialModel, path) -> None:
    atomic_write(path, dumps_checkpoint(model))


def loads_checkpoint(blob: bytes) -> SequentialModel:
    if len(blob) < len(MAGIC) or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("magic", "not a tgocr checkpoint")
    pos = len(MAGIC)
    if len(blob) < pos + _LEN.size:
        raise CheckpointError("manifest", "truncated before manifest length")
    (n,) = _LEN.unpack_from(blob, pos)
    pos += _LEN.size
    if len(blob) < pos + n:
        raise CheckpointError("manifest", "truncated manifest")
    try:
        manifest = json.loads(blob[pos : pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError("manifest", f"malformed JSON ({exc})") from exc
    pos += n
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            "version", f"format version {manifest.get('format_version')!r}, expected {FORMAT_VERSION}"
        )

    specs = []
    for entry in manifest.get("layers", []):
        for p in entry.get("params", []):
            specs.append(tuple(p["shape"]))
    n_values = sum(int(np.prod(s)) for s in specs)
    end = pos + n_values * _STORE_DTYPE.itemsize
    if len(blob) < end:
        raise CheckpointError("parameters", f"truncated: need {end} bytes, file has {len(blob)}")
    if len(blob) != end + _LEN.size:
        raise CheckpointError("checksum", "missing or misplaced CRC-32 trailer")
    (crc,) = _LEN.unpack_from(blob, end)
    if zlib.crc32(blob[:end]) != crc:
        raise CheckpointError("checksum", "CRC-32 mismatch, file is corrupted")

    try:
        layers = []
        for entry in manifest["layers"]:
            cfg = {k: v for k, v in entry.items() if k != "params"}
            layers.append(layer_from_config(cfg))
        model = SequentialModel(
            layers,
            manifest["architecture"],
            input_shape=tuple(manifest["input_shape"]),
            num_classes=manifest["num_classes"],
            seed=manifest.get("seed"),
        )
    except Exception as exc:
        raise CheckpointError("manifest", f"cannot rebuild model ({exc})") from exc

    values = np.frombuffer(blob, dtype=_STORE_DTYPE, count=n_values, offset=pos)
    offset = 0
    for layer in model.param_layers():
        for _, t in layer.params.tensors():
            size = t.size
            t[...] = values[offset : offset + size].reshape(t.shape)
            offset += size
    if offset != n_values or model.param_count() != manifest.get("param_count"):
        raise CheckpointError("parameters", "parameter count does not match the manifest")
    return model


def load_checkpoint(path) -> SequentialModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError("file", f"cannot read {path}: {exc}") from exc
    return loads_checkpoint(blob)


def read_manifest(path) -> dict:
    blob = Path(path).read_bytes()
    (n,) = _LEN.unpack_from(blob, len(MAGIC))
    return json.loads(blob[len(MAGIC) + _LEN.size : len(MAGIC) + _LEN.size + n])
