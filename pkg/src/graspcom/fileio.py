"""File plumbing: atomic writes, array codecs for JSON containers, hashing."""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile

import numpy as np


def atomic_write_text(path, text: str) -> None:
    """Write UTF-8 text via a temp file and atomic rename (LF endings)."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config_dict: dict) -> str:
    """Short stable hash of a config mapping, for artifact provenance."""
    digest = hashlib.sha256(canonical_json(config_dict).encode("utf-8"))
    return digest.hexdigest()[:12]


def encode_array(a: np.ndarray) -> dict:
    """Self-describing little-endian float64 payload for JSON containers."""
    a = np.ascontiguousarray(a, dtype="<f8")
    return {
        "dtype": "<f8",
        "shape": list(a.shape),
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    a = np.frombuffer(raw, dtype=d["dtype"]).copy()
    return a.reshape(d["shape"])
