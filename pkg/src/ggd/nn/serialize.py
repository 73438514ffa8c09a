"""Weight bundle files: one JSON header line followed by a flat little-endian blob."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ggd.errors import ParseError
from ggd.graph import atomic_write_bytes

MAGIC = "ggd-weights"


def dumps_bundle(params: dict, meta: dict | None = None, dtype: str = "<f8") -> bytes:
    names = sorted(params)
    header = {
        "format": MAGIC,
        "version": 1,
        "dtype": dtype,
        "tensors": [{"name": n, "shape": list(np.shape(params[n]))} for n in names],
        "meta": meta or {},
    }
    blob = b"".join(np.ascontiguousarray(params[n], dtype=dtype).tobytes() for n in names)
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n" + blob


def loads_bundle(data: bytes):
    head, sep, blob = data.partition(b"\n")
    if not sep:
        raise ParseError("weight bundle has no header line")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad weight bundle header: {exc}") from None
    if header.get("format") != MAGIC:
        raise ParseError("not a ggd weight bundle")
    dtype = np.dtype(header["dtype"])
    params, pos = {}, 0
    for t in header["tensors"]:
        count = int(np.prod(t["shape"])) if t["shape"] else 1
        size = count * dtype.itemsize
        if pos + size > len(blob):
            raise ParseError("weight bundle blob is truncated")
        params[t["name"]] = np.frombuffer(blob[pos:pos + size], dtype=dtype).astype(np.float64).reshape(t["shape"])
        pos += size
    if pos != len(blob):
        raise ParseError("weight bundle blob has trailing bytes")
    return params, header["meta"]


def save_bundle(path, params: dict, meta: dict | None = None, dtype: str = "<f8") -> None:
    atomic_write_bytes(path, dumps_bundle(params, meta, dtype))


def load_bundle(path):
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"missing file: {p}")
    return loads_bundle(p.read_bytes())
