"""Counter-based random symbols.

Every random cell symbol is a pure function of ``(seed, step, cell)``, so a
trajectory is reproducible bit for bit whatever order the cells are drawn in.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def symbol(seed: int, t: int, z: int, size: int) -> int:
    """Uniform symbol in ``range(size)`` for step ``t`` and cell ``z``.

    Draws ``mix64(seed ^ mix64(counter))`` for successive counters starting
    at ``t*GOLDEN ^ z`` and rejects values at or above the largest multiple
    of ``size`` below 2**64.
    """
    if size < 1:
        raise ValueError("alphabet size must be positive")
    if size == 1:
        return 0
    limit = ((1 << 64) // size) * size
    counter = ((t * GOLDEN) ^ (z & MASK64)) & MASK64
    seed &= MASK64
    while True:
        value = mix64(seed ^ mix64(counter))
        if value < limit:
            return value % size
        counter = (counter + 1) & MASK64


def row(seed: int, t: int, width: int, size: int) -> list[int]:
    return [symbol(seed, t, z, size) for z in range(width)]
