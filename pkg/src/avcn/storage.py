"""Byte-deterministic tensor files for grid caches and parameter checkpoints.

Layout::

    AVCN-TENSORS <version>\\n
    <one line of JSON: {"meta": {...}, "tensors": [{"name", "shape", "offset"}, ...]}>\\n
    <raw little-endian float64 data, tensors back to back>

Writing the same content twice yields identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import MalformedDataset

MAGIC = b"AVCN-TENSORS"
VERSION = 1


def write_tensors(path, tensors, meta=None) -> None:
    """``tensors`` is a sequence of ``(name, array)`` pairs."""
    entries, blobs, offset = [], [], 0
    for name, arr in tensors:
        a = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        blobs.append(a.tobytes())
        offset += a.nbytes
    header = json.dumps({"meta": meta or {}, "tensors": entries}, sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" " + str(VERSION).encode() + b"\n")
        fh.write(header.encode() + b"\n")
        for b in blobs:
            fh.write(b)


def read_tensors(path):
    """Return ``(meta, [(name, array), ...])``."""
    with open(path, "rb") as fh:
        first = fh.readline().rstrip(b"\n")
        parts = first.split(b" ")
        if len(parts) != 2 or parts[0] != MAGIC:
            raise MalformedDataset(f"{path} is not a tensor file")
        if int(parts[1]) != VERSION:
            raise MalformedDataset(f"{path} has format version {int(parts[1])}, expected {VERSION}")
        header = json.loads(fh.readline())
        data = fh.read()
    out = []
    for e in header["tensors"]:
        count = int(np.prod(e["shape"])) if e["shape"] else 1
        a = np.frombuffer(data, dtype="<f8", count=count, offset=e["offset"])
        out.append((e["name"], a.reshape(e["shape"]).astype(np.float64)))
    return header["meta"], out
