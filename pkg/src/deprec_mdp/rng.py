"""
Counter-Addressed Random Streams
Version: 1.0.0
Created: 2026-10-18

Reproducible uniform variates addressed by (seed, counter). The stream is cut
into fixed-size blocks; block b of seed s is drawn from a PCG64 generator
keyed by SeedSequence([s, b]). Both are specified bit-for-bit by numpy, so a
given (seed, counter) yields the same variate on every platform.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096
_UINT64 = 2 ** 64


@dataclass(frozen=True)
class RngState:
    """
    Position in a seeded uniform stream.

    Attributes:
        seed: 64-bit seed (reduced modulo 2**64)
        counter: index of the next variate to be consumed
    """

    seed: int
    counter: int = 0

    def __post_init__(self):
        if self.counter < 0:
            raise ValueError(f"counter must be nonnegative, got {self.counter}")
        object.__setattr__(self, "seed", int(self.seed) % _UINT64)
        object.__setattr__(self, "counter", int(self.counter))

    def advanced(self, count: int = 1) -> "RngState":
        """Return the state after consuming `count` variates."""
        return RngState(self.seed, self.counter + count)


def _block(seed: int, index: int) -> List[float]:
    generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    return generator.random(BLOCK_SIZE).tolist()


def uniform_at(state: RngState) -> float:
    """Return the variate in [0, 1) at the given stream position."""
    block_index, offset = divmod(state.counter, BLOCK_SIZE)
    return _block(state.seed, block_index)[offset]


class UniformStream:
    """
    Sequential reader over a seeded stream, caching one block at a time.

    Reading n variates from UniformStream(state) gives exactly
    uniform_at(state), uniform_at(state.advanced(1)), ... but without
    regenerating a block per draw. A stream is single-owner.
    """

    def __init__(self, state: RngState):
        self._seed = state.seed
        self._counter = state.counter
        self._block_index = -1
        self._values: List[float] = []

    def draw(self) -> float:
        block_index, offset = divmod(self._counter, BLOCK_SIZE)
        if block_index != self._block_index:
            self._values = _block(self._seed, block_index)
            self._block_index = block_index
        self._counter += 1
        return self._values[offset]

    def draw_index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return min(int(self.draw() * n), n - 1)

    @property
    def state(self) -> RngState:
        return RngState(self._seed, self._counter)
