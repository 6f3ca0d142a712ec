"""Counter-based random streams.

Every draw in the package comes from a Philox generator whose key is derived
from ``(seed, *key)``.  Two streams with different keys never overlap and a
stream can be rebuilt from its key alone, so work can be split into blocks and
run in any order without changing results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# purpose tags appended to a block key
GAUSS = 0
JUMPS = 1
BRIDGE = 2
REFINE = 3
SUBORDINATOR = 4


@dataclass(frozen=True)
class RandomStream:
    seed: int
    key: tuple[int, ...] = ()

    def child(self, *key: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self, *key: int) -> np.random.Generator:
        full = self.key + tuple(int(k) for k in key)
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=full)
        return np.random.Generator(np.random.Philox(ss))


def as_stream(rng) -> RandomStream:
    """Accept a RandomStream or an integer seed."""
    if isinstance(rng, RandomStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomStream(int(rng))
    raise TypeError(f"expected RandomStream or int seed, got {type(rng).__name__}")
