"""Small deterministic PRNG shared by seed padding and the mock backend."""

from __future__ import annotations

import hashlib
from typing import Sequence

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood 2014): state += golden gamma, then mix.

    Used instead of :mod:`random` so the padding sequence is pinned by a
    ten-line algorithm rather than by the interpreter's Mersenne Twister.
    """

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def sample(self, items: Sequence, k: int) -> list:
        """k items without replacement via a partial Fisher-Yates shuffle."""
        pool = list(items)
        k = min(k, len(pool))
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def domain_rng(rng_seed: int, domain: str) -> SplitMix64:
    # per-domain stream so domains can be processed independently
    return SplitMix64((rng_seed & _MASK64) ^ _fnv1a64(domain))


def seed_from(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary printable parts."""
    digest = hashlib.sha256("\x00".join(map(str, parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
