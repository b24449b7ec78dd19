"""Model checkpoint serialization.

Layout: 4-byte magic "IXCK", u16 version, u32 JSON header length, the UTF-8
JSON header, then the raw little-endian array bytes concatenated in header
order. The header records each array's name, dtype and shape plus a free-form
metadata dict.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from preictal.errors import FormatError, TruncationError

MAGIC = b"IXCK"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


def save_checkpoint(arrays: dict[str, np.ndarray], metadata: dict | None = None) -> bytes:
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps({"arrays": entries, "metadata": metadata or {}}, sort_keys=True).encode()
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(blobs)


def load_checkpoint(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if len(data) < _PREFIX.size:
        raise TruncationError(f"checkpoint too short: {len(data)} bytes")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad checkpoint magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    offset = _PREFIX.size
    if len(data) < offset + header_len:
        raise TruncationError("checkpoint header truncated")
    try:
        header = json.loads(data[offset : offset + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"checkpoint header is not valid JSON: {exc}") from exc
    offset += header_len
    if not isinstance(header, dict) or not isinstance(header.get("arrays"), list):
        raise FormatError("checkpoint header missing the array table")

    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        try:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed checkpoint array entry: {exc}") from exc
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        if len(data) < offset + nbytes:
            raise TruncationError(f"checkpoint array {entry['name']!r} truncated")
        arrays[entry["name"]] = np.frombuffer(
            data[offset : offset + nbytes], dtype=dtype
        ).reshape(shape).copy()
        offset += nbytes
    return arrays, header.get("metadata", {})
