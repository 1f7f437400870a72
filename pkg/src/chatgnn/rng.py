"""Deterministic random number generation.

A single xoshiro256** stream seeded through splitmix64. The whole
pipeline is integer arithmetic on 64-bit words, so a given seed yields
the identical stream on every platform, unlike generators that go
through platform libm.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_DOUBLE_SCALE = 2.0 ** -53


def _splitmix64(state: int) -> tuple[int, int]:
    # Returns (new_state, output). Used only to expand the user seed
    # into the four xoshiro state words.
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Rng:
    """xoshiro256** generator with a splitmix64-expanded seed."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int):
        state = seed & _MASK
        state, self._s0 = _splitmix64(state)
        state, self._s1 = _splitmix64(state)
        state, self._s2 = _splitmix64(state)
        state, self._s3 = _splitmix64(state)

    def next_u64(self) -> int:
        """Next raw 64-bit output."""
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        x = (s1 * 5) & _MASK
        result = (((x << 7) | (x >> 57)) & _MASK) * 9 & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One double in [lo, hi), using the top 53 bits of the stream."""
        u = (self.next_u64() >> 11) * _DOUBLE_SCALE
        return lo + (hi - lo) * u

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Array of uniform doubles, consumed row-major from the stream."""
        n = int(np.prod(shape)) if shape else 1
        out = np.empty(n, dtype=np.float64)
        nxt = self.next_u64
        for i in range(n):
            out[i] = (nxt() >> 11) * _DOUBLE_SCALE
        return (lo + (hi - lo) * out).reshape(shape)

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        # Reject the tail of the 64-bit range that does not divide evenly.
        limit = _MASK + 1 - ((_MASK + 1) % bound)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % bound

    def integers_array(self, n: int, bound: int) -> np.ndarray:
        """n unbiased integers in [0, bound)."""
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            out[i] = self.below(bound)
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of arange(n)."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self) -> "Rng":
        """Independent child stream derived from this one."""
        return Rng(self.next_u64())


def glorot_uniform(rng: Rng, fan_out: int, fan_in: int) -> np.ndarray:
    """Weight matrix of shape (fan_out, fan_in) from U(-b, b), b = sqrt(6/(fan_in+fan_out))."""
    bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform_array((fan_out, fan_in), -bound, bound)
