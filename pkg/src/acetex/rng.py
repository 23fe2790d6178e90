"""Portable seeded pseudo-randomness for reproducible training runs.

Training must give bit-identical results for a given seed no matter the
platform or numpy version, so the sampling path uses an explicit 64-bit
xorshift-family generator instead of a library RNG.
"""

from __future__ import annotations

__all__ = ["Xorshift64Star"]

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """xorshift64* generator.

    The state update is the classic 12/25/27 xorshift triple followed by a
    multiplication by 2685821657736338717 (0x2545F4914F6CDD1D), all modulo
    2**64.  The seed is first passed through one splitmix64 mixing step so
    that small or clustered seeds still start from well-spread states; the
    mixed state is never zero for any 64-bit seed.

    Bounded draws use the multiply-shift reduction ``(r * n) >> 64`` which is
    deterministic and free of modulo bias without rejection loops.
    """

    def __init__(self, seed: int):
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        self._state = z if z != 0 else 0x9E3779B97F4A7C15

    def next_uint64(self) -> int:
        s = self._state
        s ^= (s >> 12)
        s = (s ^ (s << 25)) & _MASK64
        s ^= (s >> 27)
        self._state = s
        return (s * 0x2545F4914F6CDD1D) & _MASK64

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange needs a positive bound")
        return (self.next_uint64() * n) >> 64
