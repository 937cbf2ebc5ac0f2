from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ..errors import InputDomainError


@dataclass(frozen=True)
class BitString:
    """Fixed-length binary word stored as a Python int.

    Bit 0 is the leftmost (most significant) position, so ``str(x)`` reads in
    index order and integer comparison matches big-endian comparison.
    """

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise InputDomainError(f"negative length {self.length}")
        if self.value < 0 or self.value >> self.length:
            raise InputDomainError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        value = 0
        length = 0
        for b in bits:
            b = int(b)
            if b not in (0, 1):
                raise InputDomainError(f"bit {b!r} not in {{0, 1}}")
            value = (value << 1) | b
            length += 1
        return cls(value, length)

    @classmethod
    def from_str(cls, text: str) -> BitString:
        if any(ch not in "01" for ch in text):
            raise InputDomainError(f"not a bit string: {text!r}")
        return cls(int(text, 2) if text else 0, len(text))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> BitString:
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.size == 0:
            return cls(0, 0)
        if arr.max() > 1:
            raise InputDomainError("array entries must be 0/1")
        packed = np.packbits(arr)
        pad = (-arr.size) % 8
        return cls(int.from_bytes(packed.tobytes(), "big") >> pad, int(arr.size))

    @classmethod
    def zeros(cls, length: int) -> BitString:
        return cls(0, length)

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        for i in range(self.length):
            yield (self.value >> (self.length - 1 - i)) & 1

    def __getitem__(self, key):
        if isinstance(key, slice):
            lo, hi, step = key.indices(self.length)
            if step != 1:
                return BitString.from_bits(list(self)[key])
            return self.slice(lo, max(lo, hi))
        i = int(key)
        if i < 0:
            i += self.length
        if not 0 <= i < self.length:
            raise InputDomainError(f"bit index {key} out of range for length {self.length}")
        return (self.value >> (self.length - 1 - i)) & 1

    def slice(self, lo: int, hi: int) -> BitString:
        if not 0 <= lo <= hi <= self.length:
            raise InputDomainError(f"slice [{lo}:{hi}) out of range for length {self.length}")
        width = hi - lo
        return BitString((self.value >> (self.length - hi)) & ((1 << width) - 1), width)

    def select(self, positions: Iterable[int]) -> BitString:
        """Substring on an ordered set of coordinates."""
        return BitString.from_bits(self[p] for p in positions)

    def concat(self, other: BitString) -> BitString:
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    def flip(self, *positions: int) -> BitString:
        value = self.value
        for p in map(int, positions):
            if not 0 <= p < self.length:
                raise InputDomainError(f"bit index {p} out of range for length {self.length}")
            value ^= 1 << (self.length - 1 - p)
        return BitString(value, self.length)

    def weight(self) -> int:
        return self.value.bit_count()

    def to_array(self) -> np.ndarray:
        if self.length == 0:
            return np.zeros(0, dtype=np.uint8)
        nbytes = (self.length + 7) // 8
        pad = nbytes * 8 - self.length
        raw = np.frombuffer((self.value << pad).to_bytes(nbytes, "big"), dtype=np.uint8)
        return np.unpackbits(raw)[: self.length]

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __repr__(self) -> str:
        return f"BitString('{self}')"


def hamming(x: BitString, y: BitString) -> int:
    if x.length != y.length:
        raise InputDomainError(f"length mismatch: {x.length} vs {y.length}")
    return (x.value ^ y.value).bit_count()
