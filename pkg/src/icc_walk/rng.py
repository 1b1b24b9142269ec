"""Reproducible random streams.

A stream is a Philox generator keyed by ``(seed, stream_id)``.  Philox is
counter based, so distinct keys give independent streams and a stream can be
regenerated from its key alone.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 64) - 1

# fixed stream ids per pipeline stage
CALIBRATE = 1
HOLDOUT = 2
CLAIM = 3
OMEGA = 4
EVENT = 5
SAMPLE = 6
RECORDS = 7


def stream_key(seed: int, stream_id: int | str) -> tuple[int, int]:
    if isinstance(stream_id, str):
        stream_id = int.from_bytes(hashlib.sha256(stream_id.encode()).digest()[:8], "little")
    return seed & _MASK, stream_id & _MASK


def stream(seed: int, stream_id: int | str = 0) -> np.random.Generator:
    k0, k1 = stream_key(seed, stream_id)
    return np.random.Generator(np.random.Philox(key=np.array([k0, k1], dtype=np.uint64)))


def as_generator(rng, stream_id: int | str = 0) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else int(rng), stream_id)
