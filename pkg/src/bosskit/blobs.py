"""Binary tensor blobs: little-endian, row-major, with a small shape header.

Shared by the model and shape-space archives. Header layout:
magic 'BKT1', uint8 dtype code (0 = float64, 1 = int64), uint32 ndim,
ndim x uint64 dims, then the raw data.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ParseError

_MAGIC = b"BKT1"
_CODES = {0: np.dtype("<f8"), 1: np.dtype("<i8")}
_RCODES = {np.dtype("<f8"): 0, np.dtype("<i8"): 1}


def write_blob(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype == np.float64:
        arr = arr.astype("<f8", copy=False)
    elif arr.dtype == np.int64:
        arr = arr.astype("<i8", copy=False)
    else:
        raise ValueError(f"unsupported blob dtype {arr.dtype}")
    header = _MAGIC + struct.pack("<BI", _RCODES[arr.dtype], arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())
    os.replace(tmp, path)


def read_blob(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ParseError(f"not a tensor blob: {path}", offset=0)
    code, ndim = struct.unpack_from("<BI", blob, 4)
    if code not in _CODES:
        raise ParseError(f"unknown dtype code {code}", offset=4)
    shape = struct.unpack_from(f"<{ndim}Q", blob, 9)
    dtype = _CODES[code]
    start = 9 + 8 * ndim
    expected = start + int(np.prod(shape)) * dtype.itemsize
    if len(blob) < expected:
        raise ParseError("truncated tensor blob", offset=len(blob))
    data = np.frombuffer(blob, dtype=dtype, count=int(np.prod(shape)), offset=start)
    return data.reshape(shape).copy()
