"""Versioned checkpoint files: JSON header plus packed little-endian floats."""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .network import ModelConfig, param_shapes

FORMAT_VERSION = 1
_MAGIC = b"BORTCKPT"


class CheckpointError(ValueError):
    pass


def save_params(path: str | Path, config: ModelConfig, params: dict[str, Tensor]) -> None:
    index = {}
    offset = 0
    blobs = []
    for name, tensor in params.items():
        arr = np.ascontiguousarray(tensor.data, dtype="<f4")
        index[name] = {"shape": list(arr.shape), "offset": offset}
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "config": config.to_json(), "index": index}
    ).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_params(path: str | Path) -> tuple[ModelConfig, dict[str, Tensor]]:
    raw = Path(path).read_bytes()
    if len(raw) < len(_MAGIC) + 8 or raw[:len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    (header_len,) = struct.unpack("<Q", raw[len(_MAGIC):len(_MAGIC) + 8])
    body_start = len(_MAGIC) + 8 + header_len
    if len(raw) < body_start:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[len(_MAGIC) + 8:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format_version {header.get('format_version')} != {FORMAT_VERSION}"
        )
    config = ModelConfig.from_json(header["config"])
    expected = param_shapes(config)
    if set(header["index"]) != set(expected):
        raise CheckpointError(f"{path}: tensor names do not match the config")
    params: dict[str, Tensor] = {}
    for name, shape in expected.items():
        entry = header["index"][name]
        if tuple(entry["shape"]) != shape:
            raise CheckpointError(
                f"{path}: {name} has shape {entry['shape']}, config implies {shape}"
            )
        start = body_start + entry["offset"]
        nbytes = int(np.prod(shape)) * 4
        if start + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated data for {name}")
        arr = np.frombuffer(raw[start:start + nbytes], dtype="<f4").reshape(shape)
        if not np.isfinite(arr).all():
            raise CheckpointError(f"{path}: non-finite values in {name}")
        params[name] = Tensor(arr.copy(), needs_grad=True)
    return config, params


def checkpoint_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
