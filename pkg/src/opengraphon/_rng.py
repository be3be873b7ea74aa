"""Seed derivation for independent random sub-streams.

Every stream is keyed by ``(master_seed, trial, purpose)`` and built with
:class:`numpy.random.SeedSequence`, which hashes the key into a well mixed
state. Two different keys give statistically independent streams, and the
same key always gives the same stream.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "topology": 1,
    "events": 2,
    "initial": 3,
    "estimate": 4,
}


def substream(master_seed: int, *key: int | str) -> np.random.Generator:
    spawn_key = tuple(PURPOSES[k] if isinstance(k, str) else int(k) for k in key)
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
