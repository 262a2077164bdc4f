"""Seeded random streams.

Replicate ``i`` of a run seeded with ``s`` draws from
``numpy.random.default_rng([s, i])``; numpy's SeedSequence hashes the pair,
so streams for different indices are statistically independent and the
mapping does not depend on how replicates are scheduled across workers.
"""
from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate
from typing import Optional, Sequence

import numpy as np

_BUFFER = 4096


class RngStream:
    """Deterministic uniform stream with buffered draws."""

    def __init__(self, seed: Optional[int] = None, generator: Optional[np.random.Generator] = None):
        if generator is None:
            generator = np.random.default_rng(seed)
        self.generator = generator
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.generator.random(_BUFFER)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def choice(self, weights: Sequence[float]) -> int:
        """Index drawn with probability proportional to ``weights``, found by
        comparing one uniform with the cumulative sums in the given order."""
        cum = list(accumulate(float(w) for w in weights))
        total = cum[-1]
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        i = bisect_right(cum, self.uniform() * total)
        return min(i, len(cum) - 1)


def derive_stream(master_seed: int, index: int) -> RngStream:
    return RngStream(generator=np.random.default_rng([int(master_seed), int(index)]))


def derive_generator(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), int(index)])
