"""Single-file model container: magic, version, JSON header, raw float64 blocks.

Layout (all integers little-endian):

    bytes 0..7    magic  b"PG4MODEL"
    bytes 8..11   format version, uint32 (currently 1)
    bytes 12..19  header length in bytes, uint64
    header        UTF-8 JSON: {"method": ..., "meta": {...},
                   "arrays": [{"name": ..., "shape": [...]}, ...]}
    payload       each array's float64 data, little-endian, C order,
                  concatenated in header order
    trailer       SHA-256 of every preceding byte (32 bytes)

The checksum makes truncation and bit corruption loud; the version field
makes future layout changes refuse to load silently.  Every method in the
package (the convolutional model and all baselines) serializes through
this one format, distinguished by the ``method`` id.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PG4MODEL"
VERSION = 1


class ContainerError(ValueError):
    """Base class for model-file problems."""


class ChecksumError(ContainerError):
    pass


class VersionError(ContainerError):
    pass


def save_container(
    path: str | Path,
    method: str,
    meta: dict,
    arrays: dict[str, np.ndarray],
) -> None:
    """Write a container file; array order follows the dict order."""
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.astype("<f8").tobytes())
    header = json.dumps(
        {"method": method, "meta": meta, "arrays": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    body = MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", len(header)) + header
    body += b"".join(blobs)
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(body + digest)


def load_container(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Read and verify a container; returns (method, meta, arrays)."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4 + 8 + 32:
        raise ContainerError(f"{path}: file too short to be a model container")
    if raw[: len(MAGIC)] != MAGIC:
        raise ContainerError(f"{path}: bad magic bytes, not a model container")
    (version,) = struct.unpack_from("<I", raw, len(MAGIC))
    if version != VERSION:
        raise VersionError(
            f"{path}: container format version {version} not supported (expected {VERSION})"
        )
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError(f"{path}: checksum mismatch, file is corrupted or truncated")
    offset = len(MAGIC) + 4
    (header_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    if offset + header_len > len(body):
        raise ContainerError(f"{path}: header overruns file")
    header = json.loads(body[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(body):
            raise ContainerError(f"{path}: array {entry['name']!r} overruns file")
        arrays[entry["name"]] = (
            np.frombuffer(body[offset : offset + nbytes], dtype="<f8")
            .astype(np.float64)
            .reshape(shape)
        )
        offset += nbytes
    if offset != len(body):
        raise ContainerError(f"{path}: {len(body) - offset} unexpected trailing bytes")
    return header["method"], header["meta"], arrays
