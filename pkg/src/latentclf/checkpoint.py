"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    bytes 0..7    magic ``LVTCKPT1``
    bytes 8..11   uint32 length N of the JSON header
    bytes 12..    UTF-8 JSON header, N bytes
    then          parameter arrays, row-major float64 little-endian,
                  concatenated in header manifest order

The JSON header holds the model config, the vocabulary (token list in id
order plus min_count), the fixed label prior, and an ``arrays`` manifest
of (name, shape) in storage order.  Save/load round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .corpus import Vocabulary
from .models import ModelConfig, Params, init_params

MAGIC = b"LVTCKPT1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """The file is not a valid checkpoint of a supported version."""


def save_checkpoint(path, params: Params, vocab: Vocabulary) -> None:
    names = sorted(params.tensors)
    header = {
        "format_version": FORMAT_VERSION,
        "config": asdict(params.config),
        "vocab": {"tokens": list(vocab.id_to_token), "min_count": vocab.min_count},
        "label_prior": params.label_prior.tolist(),
        "arrays": [{"name": n, "shape": list(params.tensors[n].data.shape)} for n in names],
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(params.tensors[n].data, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[Params, Vocabulary]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise CheckpointError(f"{path}: bad magic {magic!r}")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
        config = ModelConfig(**header["config"])
        params = init_params(config, seed=0)
        expected = sorted(params.tensors)
        manifest = [a["name"] for a in header["arrays"]]
        if manifest != expected:
            raise CheckpointError(f"{path}: arrays {manifest} do not match config arrays {expected}")
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            tensor = params.tensors[entry["name"]]
            if tensor.data.shape != shape:
                raise CheckpointError(
                    f"{path}: array {entry['name']} has shape {shape}, config wants {tensor.data.shape}")
            tensor.data = data.astype(np.float64).copy()
        params.label_prior = np.asarray(header["label_prior"], dtype=np.float64)
    tokens = tuple(header["vocab"]["tokens"])
    vocab = Vocabulary(
        id_to_token=tokens,
        token_to_id={t: i for i, t in enumerate(tokens) if i >= 3},
        min_count=header["vocab"]["min_count"],
    )
    return params, vocab
