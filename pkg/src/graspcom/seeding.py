"""Deterministic derivation of independent random streams.

Every stochastic stage of the pipeline (per-grasp data collection, training,
per-episode observation noise, random-action draws) owns a child stream
derived from the run seed plus a namespace, so stages can be reordered or
parallelized without changing results and benchmark episodes stay paired
across methods.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(key) -> int:
    """Map a namespace key to a stable integer for SeedSequence entropy."""
    if isinstance(key, (int, np.integer)):
        return int(key)
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:16], "little")
    raise TypeError(f"unsupported seed key type: {type(key).__name__}")


def float_bits(x: float) -> int:
    """Bit pattern of a float64, for seeding on exact float values."""
    return int(np.float64(x).view(np.uint64))


def derive_seed_sequence(*keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key_to_int(k) for k in keys])


def derive_rng(*keys) -> np.random.Generator:
    """Independent generator for the stream named by ``keys``.

    Keys may be ints or strings; floats must be converted with
    :func:`float_bits` by the caller so the derivation is exact.
    """
    return np.random.default_rng(derive_seed_sequence(*keys))
