"""
Bitstrings, seeded randomness and instance transforms shared by every module.

Bits are stored packed (little bit order, 8 bits per byte) with the length
carried separately; popcount and XOR work on the packed bytes.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., n) 0/1 array along the last axis."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=-1, bitorder="little")


def unpack_rows(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words, axis=-1, count=n, bitorder="little")


def popcount_rows(words: np.ndarray) -> np.ndarray:
    """Number of 1-bits per row of a packed matrix (or of a packed vector)."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


@dataclass(frozen=True)
class Bitstring:
    words: bytes
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Bitstring length must be positive, got {self.n}")
        if len(self.words) != (self.n + 7) // 8:
            raise ValueError("packed length does not match n")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "Bitstring":
        arr = np.fromiter((int(b) for b in bits), dtype=np.int64)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        return cls.from_array(arr.astype(np.uint8))

    @classmethod
    def from_string(cls, s: str) -> "Bitstring":
        return cls.from_bits(int(ch) for ch in s.strip())

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "Bitstring":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(words=pack_rows(bits).tobytes(), n=int(bits.shape[-1]))

    @classmethod
    def from_words(cls, words: np.ndarray, n: int) -> "Bitstring":
        return cls(words=np.asarray(words, dtype=np.uint8).tobytes(), n=n)

    @classmethod
    def zeros(cls, n: int) -> "Bitstring":
        return cls.from_array(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "Bitstring":
        return cls.from_array(np.ones(n, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, rng: "RandomSource") -> "Bitstring":
        return cls.from_array(rng.generator.integers(0, 2, size=n, dtype=np.uint8))

    @property
    def packed(self) -> np.ndarray:
        return np.frombuffer(self.words, dtype=np.uint8)

    @property
    def bits(self) -> np.ndarray:
        return unpack_rows(self.packed, self.n)

    def __len__(self) -> int:
        return self.n

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def count_ones(x: Bitstring) -> int:
    return int(popcount_rows(x.packed))


def hamming(x: Bitstring, y: Bitstring) -> int:
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} != {y.n}")
    return int(popcount_rows(np.bitwise_xor(x.packed, y.packed)))


def complement(x: Bitstring) -> Bitstring:
    return Bitstring.from_array(1 - x.bits)


# --------- Randomness ---------

def stable_uint64_from_str(s: str) -> int:
    h = hashlib.sha1(s.encode("utf-8")).digest()
    # take first 8 bytes as unsigned 64-bit int
    return struct.unpack(">Q", h[:8])[0]


def replication_seed(base_seed: int, index: int) -> int:
    """child seed = first 8 bytes (big-endian) of SHA-1("<base_seed>:<index>")"""
    return stable_uint64_from_str(f"{int(base_seed)}:{int(index)}")


class RandomSource:
    """
    Single-owner PCG64 stream. Never share one instance between concurrent runs.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def for_replication(cls, base_seed: int, index: int) -> "RandomSource":
        return cls(replication_seed(base_seed, index))

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size=size)


# --------- Instance transforms ---------

@dataclass(frozen=True)
class InstanceTransform:
    """
    y[i] = x[permutation[i]] XOR mask[i]  (0-based positions).
    """

    mask: Bitstring
    permutation: Tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.mask.n
        if len(self.permutation) != n:
            raise ValueError("permutation length does not match mask length")
        if sorted(self.permutation) != list(range(n)):
            raise ValueError("permutation is not a bijection on positions")

    @property
    def n(self) -> int:
        return self.mask.n

    @classmethod
    def identity(cls, n: int) -> "InstanceTransform":
        return cls(mask=Bitstring.zeros(n), permutation=tuple(range(n)))

    @classmethod
    def from_lists(cls, mask: Sequence[int], permutation: Sequence[int]) -> "InstanceTransform":
        return cls(mask=Bitstring.from_bits(mask), permutation=tuple(int(p) for p in permutation))

    @classmethod
    def random(cls, n: int, rng: RandomSource) -> "InstanceTransform":
        perm = rng.generator.permutation(n)
        return cls(mask=Bitstring.random(n, rng), permutation=tuple(int(p) for p in perm))

    def is_identity(self) -> bool:
        return count_ones(self.mask) == 0 and self.permutation == tuple(range(self.n))

    def inverse(self) -> "InstanceTransform":
        perm = np.asarray(self.permutation)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n)
        return InstanceTransform(
            mask=Bitstring.from_array(self.mask.bits[inv]),
            permutation=tuple(int(p) for p in inv),
        )

    def count_mask(self) -> np.ndarray:
        """
        Packed mask m' with |T(x)| = |x XOR m'|; lets populations be scored
        without permuting every row.
        """
        inv = np.asarray(self.inverse().permutation)
        return pack_rows(self.mask.bits[inv])


def apply_transform(t: InstanceTransform, x: Bitstring) -> Bitstring:
    if t.n != x.n:
        raise ValueError(f"dimension mismatch: transform n={t.n}, x n={x.n}")
    bits = x.bits[np.asarray(t.permutation)] ^ t.mask.bits
    return Bitstring.from_array(bits)
