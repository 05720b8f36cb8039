"""Self-describing binary tensor files (QMRT format).

Layout: magic ``QMRT``, 1-byte version (=1), 1-byte dtype code
(0=real64, 1=complex128, 2=real32), 1-byte ndim, ndim little-endian
uint64 dims, then the raw little-endian row-major payload (complex
stored as interleaved re,im). The format is deliberately minimal so
other tools can read and write it with a few lines of code.
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"QMRT"
VERSION = 1

_DTYPE_TO_CODE = {
    np.dtype("float64"): 0,
    np.dtype("complex128"): 1,
    np.dtype("float32"): 2,
}
_CODE_TO_DTYPE = {code: dt for dt, code in _DTYPE_TO_CODE.items()}


class TensorFormatError(ValueError):
    """Raised when a file does not conform to the QMRT format."""


def write_tensor(values: np.ndarray, path: str | os.PathLike) -> None:
    """Write an array to ``path`` in QMRT format.

    Only float64, complex128 and float32 arrays are accepted; values
    must be finite.
    """
    arr = np.asarray(values, order="C")  # keeps 0-d shape, unlike ascontiguousarray
    if arr.dtype not in _DTYPE_TO_CODE:
        raise TensorFormatError(
            f"unsupported dtype {arr.dtype} (use real64, complex128 or real32)"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"refusing to write non-finite values to {path}")
    if arr.ndim > 255:
        raise TensorFormatError("ndim exceeds 255")

    header = MAGIC + bytes([VERSION, _DTYPE_TO_CODE[arr.dtype], arr.ndim])
    dims = b"".join(struct.pack("<Q", d) for d in arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(dims)
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"failed to write tensor to {path}: {exc}") from exc


def read_tensor(path: str | os.PathLike) -> np.ndarray:
    """Read a QMRT file back into an array, validating the format."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"failed to read tensor from {path}: {exc}") from exc

    if len(raw) < 7:
        raise TensorFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: bad magic {raw[:4]!r}")
    if raw[4] != VERSION:
        raise TensorFormatError(f"{path}: unknown version {raw[4]}")
    code = raw[5]
    if code not in _CODE_TO_DTYPE:
        raise TensorFormatError(f"{path}: unknown dtype code {code}")
    dtype = _CODE_TO_DTYPE[code]
    ndim = raw[6]

    dims_end = 7 + 8 * ndim
    if len(raw) < dims_end:
        raise TensorFormatError(f"{path}: truncated dims (ndim={ndim})")
    shape = tuple(
        struct.unpack("<Q", raw[7 + 8 * i : 15 + 8 * i])[0] for i in range(ndim)
    )
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1

    expected = count * dtype.itemsize
    payload = raw[dims_end:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path}: truncated payload (expected {expected} bytes, got {len(payload)})"
        )
    arr = np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype)
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise TensorFormatError(f"{path}: payload contains non-finite values")
    return arr
