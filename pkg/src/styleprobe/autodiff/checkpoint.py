"""Versioned binary checkpoint blobs for named arrays.

Layout: magic ``LPT1``, then little-endian: precision flag (1 byte,
0 = single / 1 = double), count of named arrays (u32), and per array a u16
name length, the UTF-8 name, rank (u8), extents (u32 each) and the raw
element bytes in row-major order.
"""

from __future__ import annotations

import struct

import numpy as np

from ..exceptions import BadMagic, TruncatedFile

MAGIC = b"LPT1"

_FLAG_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_PRECISION_TO_FLAG = {"single": 0, "double": 1}
_FLAG_TO_PRECISION = {0: "single", 1: "double"}


def save_arrays(path, arrays, precision="single"):
    """Write named arrays as one blob; every array is cast to ``precision``."""
    flag = _PRECISION_TO_FLAG[precision]
    dtype = _FLAG_TO_DTYPE[flag]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BI", flag, len(arrays)))
        for name, arr in arrays.items():
            data = np.ascontiguousarray(np.asarray(arr), dtype=dtype)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", data.ndim))
            for extent in data.shape:
                fh.write(struct.pack("<I", extent))
            fh.write(data.tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"file ended while reading {what}")
    return buf


def load_arrays(path):
    """Read a blob back; returns (dict name -> array, precision string)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise BadMagic(f"{path} is not a checkpoint blob")
        flag, count = struct.unpack("<BI", _read_exact(fh, 5, "header"))
        if flag not in _FLAG_TO_DTYPE:
            raise BadMagic(f"unknown precision flag {flag}")
        dtype = _FLAG_TO_DTYPE[flag]
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(fh, 1, "rank"))
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4, "extent"))[0] for _ in range(rank)
            )
            n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
            raw = _read_exact(fh, n_bytes, f"data of {name}")
            arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
        return arrays, _FLAG_TO_PRECISION[flag]
