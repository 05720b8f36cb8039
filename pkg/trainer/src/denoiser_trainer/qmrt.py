"""QMRT tensor files, written and read independently of the consumer.

The on-disk format is the interchange contract with the reconstruction
package: magic ``QMRT``, version byte 1, dtype code byte (0=real64,
1=complex128, 2=real32), ndim byte, ndim little-endian uint64 dims, raw
little-endian row-major payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_MAGIC = b"QMRT"
_VERSION = 1
_CODES = {0: np.dtype("float64"), 1: np.dtype("complex128"), 2: np.dtype("float32")}
_DTYPES = {v: k for k, v in _CODES.items()}


def save(values: np.ndarray, path) -> None:
    arr = np.asarray(values, order="C")
    if arr.dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(_MAGIC + bytes([_VERSION, _DTYPES[arr.dtype], arr.ndim]))
        for dim in arr.shape:
            fh.write(struct.pack("<Q", dim))
        fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 7 or raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a QMRT file")
    if raw[4] != _VERSION:
        raise ValueError(f"{path}: unsupported version {raw[4]}")
    dtype = _CODES.get(raw[5])
    if dtype is None:
        raise ValueError(f"{path}: unknown dtype code {raw[5]}")
    ndim = raw[6]
    shape = struct.unpack(f"<{ndim}Q", raw[7 : 7 + 8 * ndim]) if ndim else ()
    payload = raw[7 + 8 * ndim :]
    count = int(np.prod(shape)) if shape else 1
    if len(payload) != count * dtype.itemsize:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype).reshape(shape)
