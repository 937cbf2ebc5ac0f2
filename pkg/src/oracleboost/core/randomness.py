"""Public-coin randomness and bit accounting for one simulated protocol run."""

from __future__ import annotations

import numpy as np

from ..errors import InputDomainError

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix(seed: int, index: int) -> int:
    """SplitMix64 finalizer of ``seed`` and ``index``; used to derive independent streams."""
    z = (seed * _GOLDEN + (index + 1) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SharedRandomness:
    """Counter-based shared random stream.

    Word number ``p`` of the stream is ``mix(seed, p)``, so two parties holding
    the same ``(seed, position)`` draw identical values. Bulk vectors are
    expanded from a single drawn word with numpy's PCG64; every 64-bit element
    comes from one generator output, so a shorter expansion is a prefix of a
    longer one.
    """

    def __init__(self, seed: int, position: int = 0) -> None:
        if position < 0:
            raise InputDomainError("stream position must be non-negative")
        self.seed = int(seed) & MASK64
        self.position = int(position)

    def word(self) -> int:
        w = mix(self.seed, self.position)
        self.position += 1
        return w

    def bit(self) -> int:
        return self.word() & 1

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        if bound <= 0:
            raise InputDomainError("bound must be positive")
        if bound == 1:
            return 0
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            w = self.word()
            if w < limit:
                return w % bound

    def generator(self) -> np.random.Generator:
        """Fresh numpy generator seeded from the next stream word."""
        return np.random.Generator(np.random.PCG64(self.word()))

    def words(self, count: int) -> np.ndarray:
        """``count`` uint64 words expanded from one stream word (prefix-stable)."""
        return np.random.PCG64(self.word()).random_raw(count).astype(np.uint64, copy=False)

    def fork(self) -> SharedRandomness:
        return SharedRandomness(self.word())

    def __repr__(self) -> str:
        return f"SharedRandomness(seed={self.seed}, position={self.position})"


class CostMeter:
    """Monotone count of bits exchanged during one run."""

    def __init__(self) -> None:
        self.bits = 0

    def charge(self, nbits: int) -> None:
        if nbits < 0:
            raise InputDomainError("cannot charge a negative number of bits")
        self.bits += int(nbits)

    def __repr__(self) -> str:
        return f"CostMeter(bits={self.bits})"
