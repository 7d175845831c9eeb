"""Binary blob container shared by weight, codebook, model and feature files.

Layout (little-endian)::

    b"SNTW"  u32 version  u32 blob_count
    repeated: u16 name_len, utf-8 name, u8 rank, u32 dims[rank], f32 data[prod(dims)]

Non-numeric metadata is stored as a JSON document packed into a float32 blob
(bit reinterpretation of space-padded UTF-8 bytes), so the container only ever
holds float32 payloads and integers such as 64-bit seeds survive intact.
"""
from __future__ import annotations

import json
import os
import struct
from collections import OrderedDict

import numpy as np

MAGIC = b"SNTW"
VERSION = 1
_F32 = np.dtype("<f4")


class FormatError(ValueError):
    """Malformed or truncated container file."""


def write_blobs(path, blobs) -> None:
    """Write an ordered mapping ``name -> array`` atomically."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(blobs))]
    for name, arr in blobs.items():
        arr = np.asarray(arr, dtype=_F32)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF or arr.ndim > 0xFF:
            raise ValueError(f"blob {name!r} cannot be encoded")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        for part in parts:
            fh.write(part)
    os.replace(tmp, path)


def read_blobs(path) -> "OrderedDict[str, np.ndarray]":
    with open(path, "rb") as fh:
        buf = fh.read()
    return parse_blobs(buf, source=str(path))


def parse_blobs(buf: bytes, source: str = "<bytes>") -> "OrderedDict[str, np.ndarray]":
    if len(buf) < 12 or buf[:4] != MAGIC:
        raise FormatError(f"{source}: bad magic at offset 0 (expected {MAGIC!r})")
    version, count = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version} at offset 4")
    pos = 12
    blobs: OrderedDict[str, np.ndarray] = OrderedDict()

    def need(n, what, name=None):
        if pos + n > len(buf):
            where = f" in blob {name!r}" if name else ""
            raise FormatError(f"{source}: truncated {what}{where} at offset {pos}")

    for _ in range(count):
        need(2, "name length")
        (name_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        need(name_len, "blob name")
        name = buf[pos:pos + name_len].decode("utf-8")
        pos += name_len
        if name in blobs:
            raise FormatError(f"{source}: duplicate blob {name!r} at offset {pos - name_len}")
        need(1, "rank", name)
        rank = buf[pos]
        pos += 1
        need(4 * rank, "dimensions", name)
        dims = struct.unpack_from(f"<{rank}I", buf, pos)
        pos += 4 * rank
        nbytes = 4 * int(np.prod(dims, dtype=np.int64))
        need(nbytes, "data", name)
        arr = np.frombuffer(buf, dtype=_F32, count=nbytes // 4, offset=pos)
        blobs[name] = arr.astype(np.float32).reshape(dims)
        pos += nbytes
    if pos != len(buf):
        raise FormatError(f"{source}: {len(buf) - pos} trailing bytes at offset {pos}")
    return blobs


def pack_meta(meta: dict) -> np.ndarray:
    raw = json.dumps(meta, sort_keys=True).encode("utf-8")
    raw += b" " * (-len(raw) % 4)
    return np.frombuffer(raw, dtype=_F32).copy()


def unpack_meta(blob: np.ndarray) -> dict:
    raw = np.ascontiguousarray(blob, dtype=_F32).tobytes()
    return json.loads(raw.decode("utf-8"))
