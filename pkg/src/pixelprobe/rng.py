"""SplitMix64 pseudo-random generator.

Every stochastic component (attack search, "random:<seed>" weight presets)
draws from this generator so runs are replayable from a single 64-bit seed
on any platform. Draw order is part of each caller's documented contract.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator (Steele et al.'s SplitMix64 update)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        """Return the next raw 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform float in [0, 1) using the top 53 bits of one output."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform_in(self, lo: float, hi: float) -> float:
        """Uniform float in [lo, hi); consumes one output."""
        return lo + (hi - lo) * self.uniform()

    def below(self, n: int) -> int:
        """Integer in [0, n) via multiply-shift; consumes one output."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64
