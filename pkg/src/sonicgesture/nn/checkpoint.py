"""Self-describing model checkpoints.

Layout:
    8 bytes   magic ``SGFUSION``
    uint32 LE format version
    uint32 LE header length
    header    UTF-8 JSON: model spec (mode tag, layer specs), tensor table, metadata
    payload   tensors in table order, little-endian IEEE-754, C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from sonicgesture.core.errors import CheckpointError
from sonicgesture.nn.fusion import FusionModel, model_from_spec

MAGIC = b"SGFUSION"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<II")
_DTYPES = {"float64": "<f8", "float32": "<f4"}


class Checkpoint(NamedTuple):
    model: FusionModel
    metadata: dict[str, Any]


def checkpoint_bytes(model: FusionModel, metadata: dict[str, Any] | None = None) -> bytes:
    named = model.named_params()
    dtype_name = str(model.dtype)
    if dtype_name not in _DTYPES:
        raise CheckpointError(f"unsupported parameter dtype {dtype_name}")
    header = {
        "model": model.spec(),
        "tensors": [
            {"name": name, "shape": list(value.shape), "dtype": _DTYPES[dtype_name]}
            for name, value in named
        ],
        "metadata": metadata or {},
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(value, dtype=_DTYPES[dtype_name]).tobytes() for _, value in named
    )
    return MAGIC + _PREAMBLE.pack(FORMAT_VERSION, len(encoded)) + encoded + payload


def save_checkpoint(
    model: FusionModel, path: str | Path, metadata: dict[str, Any] | None = None
) -> Path:
    file_path = Path(path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_bytes(checkpoint_bytes(model, metadata))
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint: {exc.strerror}", path=file_path) from exc
    return file_path


def checkpoint_from_bytes(data: bytes, source: str | Path | None = None) -> Checkpoint:
    prefix = len(MAGIC) + _PREAMBLE.size
    if len(data) < prefix or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a sonicgesture checkpoint (bad magic)", path=source)
    version, header_len = _PREAMBLE.unpack_from(data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}", path=source)
    try:
        header = json.loads(data[prefix : prefix + header_len].decode("utf-8"))
        model = model_from_spec(header["model"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}", path=source) from exc

    targets = dict(model.named_params())
    table = header.get("tensors", [])
    if [entry["name"] for entry in table] != list(targets):
        raise CheckpointError("tensor table does not match the model layout", path=source)

    offset = prefix + header_len
    loaded: dict[str, np.ndarray] = {}
    for entry in table:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        if shape != targets[entry["name"]].shape:
            raise CheckpointError(
                f"tensor {entry['name']} has shape {shape}, model expects "
                f"{targets[entry['name']].shape}",
                path=source,
            )
        size = int(np.prod(shape)) * dtype.itemsize
        if offset + size > len(data):
            raise CheckpointError(f"payload truncated in tensor {entry['name']}", path=source)
        values = np.frombuffer(data, dtype=dtype, count=int(np.prod(shape)), offset=offset)
        loaded[entry["name"]] = values.reshape(shape).astype(dtype.newbyteorder("="))
        offset += size
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes after payload", path=source)

    dtype_name = table[0]["dtype"] if table else "<f8"
    model.astype(np.dtype(dtype_name).newbyteorder("="))
    for name, target in model.named_params():
        target[...] = loaded[name]
    return Checkpoint(model=model, metadata=dict(header.get("metadata", {})))


def load_checkpoint(path: str | Path) -> Checkpoint:
    file_path = Path(path)
    try:
        data = file_path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc.strerror}", path=file_path) from exc
    return checkpoint_from_bytes(data, source=file_path)
