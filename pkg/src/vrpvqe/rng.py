"""Portable seeding utilities.

Instance weights must be bit-reproducible across platforms and library
versions, so they come from a hand-rolled SplitMix64 stream (Steele,
Lea & Flood's public-domain generator) rather than numpy. Everything
else (initial parameters, trajectory branching) keys numpy PCG64
generators off 64-bit seeds derived with BLAKE2b, which is stable
across platforms; Python's builtin ``hash`` is salted per process and
is never used for seeding.
"""

from __future__ import annotations

import hashlib

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """SplitMix64 generator: 64-bit state advanced by the golden gamma.

    ``next_uint64`` applies the standard finalizer (xor-shift 30/27/31
    with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
    ``next_float`` maps the top 53 bits to [0, 1).
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        return (self.next_uint64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()


def derive_seed(*parts: object) -> int:
    """Mix arbitrary key parts into a stable 64-bit seed.

    Parts are rendered with ``repr`` and separated by an unambiguous
    delimiter, then hashed with BLAKE2b. Deterministic across runs,
    platforms, and parallel workers.
    """
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(repr(part).encode("utf-8"))
        digest.update(b"\x1f")
    return int.from_bytes(digest.digest(), "big")
