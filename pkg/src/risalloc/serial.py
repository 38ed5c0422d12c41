"""Named-array codec shared by datasets and checkpoints.

Per array: u16 name length + UTF-8 name, u8 kind (0 real / 1 complex),
u8 ndim, u64 dims, then the raw values as little-endian 64-bit floats,
complex entries interleaved (real, imag). Round-trips are bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

KIND_REAL = 0
KIND_COMPLEX = 1


def encode_named_arrays(arrays: dict) -> bytes:
    chunks = [struct.pack("<I", len(arrays))]
    for name, value in arrays.items():
        nb = name.encode("utf-8")
        arr = np.asarray(value)
        if np.iscomplexobj(arr):
            kind, data = KIND_COMPLEX, np.ascontiguousarray(arr, dtype="<c16").tobytes()
        else:
            kind, data = KIND_REAL, np.ascontiguousarray(arr, dtype="<f8").tobytes()
        chunks.append(struct.pack("<H", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<BB", kind, arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(data)
    return b"".join(chunks)


def decode_named_arrays(payload: bytes) -> dict:
    mv = memoryview(payload)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(mv):
            raise ValueError("array block ends mid-record")
        out = mv[pos:pos + n]
        pos += n
        return out

    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        kind, ndim = struct.unpack("<BB", take(2))
        shape = struct.unpack(f"<{ndim}Q", take(8 * ndim))
        if kind == KIND_REAL:
            dtype, item = "<f8", 8
        elif kind == KIND_COMPLEX:
            dtype, item = "<c16", 16
        else:
            raise ValueError(f"unknown array kind {kind}")
        size = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(take(size * item), dtype=dtype).reshape(shape).copy()
    if pos != len(mv):
        raise ValueError("trailing bytes after the last array")
    return arrays
