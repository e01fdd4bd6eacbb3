"""SplitMix64, the single pseudo-random generator used by seeding and synthesis.

Every random draw in the package goes through this generator so that runs are
reproducible bit-for-bit on any platform. The update rule, with all arithmetic
modulo 2**64::

    state = state + 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

Derived draws:

* ``random()``: ``(next_u64() >> 11) * 2**-53``, a double in [0, 1).
* ``randbelow(n)``: Lemire's multiply-shift with rejection. ``m = x * n`` as a
  128-bit product; redraw while ``m mod 2**64 < (2**64 - n) mod n``; return
  ``m >> 64``. Unbiased.
* ``shuffle(seq)``: Fisher-Yates from the last index down, ``j = randbelow(i + 1)``.
"""
from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = (-n) % n  # == 2**64 mod n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]


def derive_seed(seed: int, stage: str) -> int:
    """Per-stage seed: top-level seed plus the first 8 bytes of sha256(stage)."""
    h = int.from_bytes(hashlib.sha256(stage.encode("utf-8")).digest()[:8], "big")
    return (seed + h) & MASK64
