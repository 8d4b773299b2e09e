"""Counter-based random streams.

Every random draw in the package goes through an :class:`RngStream`. A stream
is the triple ``(seed, stream, counter)`` fed to a Philox generator, so two
streams with the same triple replay the same numbers and different stream ids
give independent sequences without any shared mutable state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        counter = np.array([self.counter & _MASK64, 0, 0, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def substream(self, *path: int) -> RngStream:
        """Derive a child stream; the path of integers identifies it."""
        entropy = [self.stream & _MASK64, *[int(p) & _MASK64 for p in path]]
        stream = int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
        return RngStream(self.seed, stream, 0)
