"""Deterministic random substreams (scheme "substream-v1").

Every stochastic step draws from its own generator, keyed by the run seed
plus a label path (e.g. ``substream(seed, "box-removal", image_id)``).
Streams are PCG64 generators seeded through ``SeedSequence`` with a spawn
key derived from a BLAKE2s digest of the label path, so one case's draws
never depend on how many other cases exist or the order they arrive in.
"""

from __future__ import annotations

import hashlib

import numpy as np

SCHEME = "substream-v1"


def substream(seed: int, *labels: str) -> np.random.Generator:
    """Generator for the (seed, labels) stream; identical inputs give identical draws."""
    digest = hashlib.blake2s("/".join(labels).encode("utf-8")).digest()
    spawn_key = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)))


def shuffled(seed: int, items: list, *labels: str) -> list:
    """Deterministic permutation of ``items`` under the named substream."""
    order = substream(seed, *labels).permutation(len(items))
    return [items[i] for i in order]
