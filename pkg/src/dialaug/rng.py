"""Portable seeded randomness.

SplitMix64 (Steele, Lea & Flood 2014; the seeding generator of the
xoshiro family). State is a 64-bit counter advanced by the golden-ratio
increment; each output is the counter passed through a fixed mixer::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    return z ^ (z >> 31)

Bounded integers use rejection sampling on the top of the 64-bit range
so they are exactly uniform. Everything here is pure integer arithmetic
and gives identical streams on every platform.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        """Uniform float in ``[0, 1)`` from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.below(len(seq))]


def sample_indices(n: int, k: int, seed: int) -> list[int]:
    """``k`` distinct indices from ``range(n)``, ascending.

    Partial Fisher-Yates: for ``i`` in ``0..k-1`` swap position ``i``
    with ``i + below(n - i)``; the first ``k`` slots are the sample.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} of {n} items")
    rng = SplitMix64(seed)
    pool = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return sorted(pool[:k])


def derive_seed(seed: int, label: str) -> int:
    """Per-label subseed: first 8 bytes (big-endian) of SHA-256 of ``"seed:label"``."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
