"""Seed-stream derivation shared across modules."""
from __future__ import annotations

import hashlib
from random import Random


def derived_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit seed derived from a master seed and a label path."""
    payload = repr((int(seed),) + tuple(labels)).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derived_rng(seed: int, *labels: object) -> Random:
    """Independent RNG stream for (seed, labels); platform-stable."""
    return Random(derived_seed(seed, *labels))
