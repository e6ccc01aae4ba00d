"""Binary model checkpoints.

Layout, all little-endian:

    bytes 0-3   magic "ALBM"
    u32         format version (currently 1)
    u32         parameter count N
    N times:    u32 ndim, then ndim u32 dims
    payload     each parameter as float32, C order, concatenated

Parameters are stored at float32 precision; training keeps float64, so a
save/load round trip quantizes. Shape identity is checked on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import LearnerError

MAGIC = b"ALBM"
VERSION = 1


def save_params(params: list[np.ndarray], path: str | Path) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for p in params:
        arr = np.asarray(p)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    for p in params:
        chunks.append(np.ascontiguousarray(p, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_params(path: str | Path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise LearnerError(f"{path}: not a model checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise LearnerError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    shapes: list[tuple[int, ...]] = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        dims = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        shapes.append(tuple(dims))
    params: list[np.ndarray] = []
    for shape in shapes:
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=offset)
        offset += 4 * n
        params.append(arr.reshape(shape).astype(np.float64))
    if offset != len(raw):
        raise LearnerError(f"{path}: {len(raw) - offset} trailing bytes in checkpoint")
    return params


def save_model(model, path: str | Path) -> None:
    save_params(model.params, path)


def load_into_model(model, path: str | Path) -> None:
    """Replace a model's parameter values from a checkpoint, in place."""
    loaded = load_params(path)
    current = model.params
    if len(loaded) != len(current):
        raise LearnerError(
            f"checkpoint holds {len(loaded)} parameters, model has {len(current)}"
        )
    for have, want in zip(current, loaded):
        if have.shape != want.shape:
            raise LearnerError(
                f"checkpoint shape {want.shape} does not fit parameter {have.shape}"
            )
        have[...] = want
