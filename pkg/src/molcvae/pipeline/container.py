"""Binary container shared by dataset caches and checkpoints.

Layout (all integers little-endian)::

    offset 0   8 bytes   magic  b"MOLCVAE\\0"
    offset 8   u32       container version
    offset 12  u32       reserved (0)
    offset 16  u64       header length H
    offset 24  H bytes   UTF-8 JSON header, sorted keys, no spaces
    then       arrays    raw little-endian data, each starting on an
                         8-byte boundary (zero padding)

The header's ``"arrays"`` entry lists ``name, dtype, shape, offset, nbytes``
with offsets relative to the start of the array section. Writing the same
header and arrays always produces the same bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MOLCVAE\0"
CONTAINER_VERSION = 1
_PREFIX = struct.Struct("<8sIIQ")
_ALIGN = 8
_DTYPES = {"f8": "<f8", "i8": "<i8", "u1": "|u1", "u8": "<u8"}


class ContainerError(ValueError):
    """Truncated, corrupt or foreign file."""


def _dtype_code(a: np.ndarray) -> str:
    code = {np.dtype(np.float64): "f8", np.dtype(np.int64): "i8", np.dtype(np.uint8): "u1",
            np.dtype(np.uint64): "u8"}.get(a.dtype)
    if code is None:
        raise TypeError(f"unsupported array dtype {a.dtype}")
    return code


def to_bytes(header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    table = []
    chunks = []
    offset = 0
    for name, a in arrays.items():
        code = _dtype_code(a)
        data = np.ascontiguousarray(a, dtype=_DTYPES[code]).tobytes()
        table.append({"name": name, "dtype": code, "shape": list(a.shape), "offset": offset, "nbytes": len(data)})
        pad = (-len(data)) % _ALIGN
        chunks.append(data + b"\0" * pad)
        offset += len(data) + pad
    if "arrays" in header:
        raise ValueError("'arrays' is a reserved header key")
    text = json.dumps({**header, "arrays": table}, sort_keys=True, separators=(",", ":"), allow_nan=False)
    blob = text.encode("utf-8")
    blob += b" " * ((-len(blob)) % _ALIGN)
    return _PREFIX.pack(MAGIC, CONTAINER_VERSION, 0, len(blob)) + blob + b"".join(chunks)


def from_bytes(raw: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(raw) < _PREFIX.size:
        raise ContainerError("file too short")
    magic, version, _, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise ContainerError("not a molcvae container")
    if version != CONTAINER_VERSION:
        raise ContainerError(f"unsupported container version {version}")
    start = _PREFIX.size + hlen
    if len(raw) < start:
        raise ContainerError("truncated header")
    try:
        header = json.loads(raw[_PREFIX.size:start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt header: {exc}") from exc
    arrays = {}
    for entry in header.pop("arrays"):
        lo = start + entry["offset"]
        hi = lo + entry["nbytes"]
        if hi > len(raw):
            raise ContainerError(f"array {entry['name']} is truncated")
        a = np.frombuffer(raw[lo:hi], dtype=_DTYPES[entry["dtype"]]).reshape(entry["shape"])
        arrays[entry["name"]] = a.astype(a.dtype.newbyteorder("="), copy=True)
    return header, arrays


def write_container(path: str | Path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(to_bytes(header, arrays))


def read_container(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    return from_bytes(Path(path).read_bytes())
