"""Portable seeded PRNG used for splits and SMO partner selection.

The generator is xorshift64* (Vigna 2014) whose state is initialised by one
round of splitmix64 on the user seed.  Both are defined on unsigned 64-bit
integers, so any language can reproduce the exact stream:

    splitmix64(z):
        z = (z + 0x9E3779B97F4A7C15) mod 2**64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
        return z ^ (z >> 31)

    xorshift64*:
        x ^= x >> 12; x ^= (x << 25) mod 2**64; x ^= x >> 27
        return (x * 0x2545F4914F6CDD1D) mod 2**64

``below(n)`` is ``next_u64() % n`` and ``shuffle`` is a Fisher-Yates pass
from the last index down to 1.
"""

from __future__ import annotations

from typing import MutableSequence

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        state = splitmix64(seed)
        # xorshift has an all-zero fixed point
        self._state = state or _GOLDEN

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffle(self, items: MutableSequence) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
