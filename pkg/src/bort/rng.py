"""Deterministic per-purpose random streams.

Every consumer of randomness (corpus generation, noise injection, model
init, batch shuffling, rollouts) owns a named stream derived from the
master seed.  Turning one consumer off must never shift the draws another
consumer sees, so streams are derived by hashing, not by sharing a
generator.
"""

import hashlib

import numpy as np


def stream_seed(master_seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(master_seed: int, label: str) -> np.random.Generator:
    """Independent generator for the (seed, purpose-label) pair."""
    return np.random.Generator(np.random.PCG64(stream_seed(master_seed, label)))
