"""Seeded, splittable random streams.

Every random draw in the package comes from a Philox (counter-based) bit
generator whose key is derived from an integer seed plus a tuple of labels::

    stream(seed, "attack", "scalars", 3)

Labels are hashed with BLAKE2b so the mapping is stable across processes and
Python versions (the builtin ``hash`` is salted per process).  Two streams with
different label tuples are statistically independent; the same tuple always
replays the same draws.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def _label_words(label) -> list[int]:
    digest = hashlib.blake2b(repr(label).encode(), digest_size=8).digest()
    return [int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:], "little")]


def stream(seed: int, *labels) -> np.random.Generator:
    """Return the generator for ``(seed, *labels)``."""
    seed = int(seed) & SEED_MASK
    entropy = [seed & 0xFFFFFFFF, seed >> 32]
    for label in labels:
        entropy.extend(_label_words(label))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_rng(seed, *labels) -> np.random.Generator:
    """Accept either an integer seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, *labels)


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from ``rng`` for a sub-computation."""
    return int(rng.integers(0, 1 << 63, dtype=np.int64))
