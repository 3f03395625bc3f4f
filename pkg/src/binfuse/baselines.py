"""Comparison baselines: the classic 3-wise xor filter and a Bloom filter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, hashing
from .errors import ConfigurationError, ConstructionError, DuplicateKeyError
from .fuse import (
    DEDUP_AFTER_FAILURES,
    DEFAULT_MAX_ATTEMPTS,
    as_key_array,
    draw_seed,
    fingerprint_dtype,
    has_duplicates,
)


def xor_array_length(n: int) -> int:
    """``floor(1.23 n) + 32`` rounded up to a multiple of 3."""
    length = math.floor(1.23 * n) + 32
    return length + (-length) % 3


@dataclass(frozen=True, eq=False)
class XorFilter:
    seed: int
    array_length: int
    fingerprint_bits: int
    fingerprints: np.ndarray

    def __post_init__(self):
        hashing.check_fingerprint_bits(self.fingerprint_bits)
        if self.array_length % 3 or self.fingerprints.shape != (self.array_length,):
            raise ConfigurationError("xor filter array must hold three equal blocks")
        self.fingerprints.flags.writeable = False

    @property
    def block_length(self) -> int:
        return self.array_length // 3

    @property
    def storage_bits(self) -> int:
        return self.array_length * self.fingerprint_bits

    def contains(self, key: int) -> bool:
        h = hashing.mix64(int(key), self.seed)
        acc = 0
        for loc in hashing.xor_locations(h, self.block_length):
            acc ^= int(self.fingerprints[loc])
        return acc == hashing.fingerprint(h, self.fingerprint_bits)

    __contains__ = contains

    def contains_many(self, keys) -> np.ndarray:
        return _kernels.xor_contains_many(
            np.ascontiguousarray(keys, dtype=np.uint64), np.uint64(self.seed),
            self.fingerprints, self.block_length, self.fingerprint_bits,
        )

    def count_matches(self, keys: np.ndarray) -> int:
        return int(_kernels.xor_count_matches(
            keys, np.uint64(self.seed), self.fingerprints,
            self.block_length, self.fingerprint_bits,
        ))

    def __eq__(self, other):
        if not isinstance(other, XorFilter):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.array_length == other.array_length
            and self.fingerprint_bits == other.fingerprint_bits
            and np.array_equal(self.fingerprints, other.fingerprints)
        )

    def __hash__(self):
        return hash((self.seed, self.array_length, self.fingerprint_bits))


def xor_try_build(keys: np.ndarray, k: int, seed: int, array_length: int | None = None):
    hashes = _kernels.mix64_many(keys, np.uint64(seed))
    if array_length is None:
        array_length = xor_array_length(keys.size)
    return _xor_from_hashes(hashes, array_length, k, seed)


def _xor_from_hashes(hashes, array_length, k, seed):
    block = array_length // 3
    peeled_hash, peeled_loc, count = _kernels.xor_peel(hashes, block)
    if count != hashes.size:
        return None
    fps = np.zeros(array_length, dtype=fingerprint_dtype(k))
    _kernels.xor_assign(peeled_hash[:count], peeled_loc[:count], block, k, fps)
    return XorFilter(seed=seed, array_length=array_length, fingerprint_bits=k, fingerprints=fps)


def xor_construct(
    keys,
    k: int = 8,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    rng: np.random.Generator | None = None,
):
    """Build an xor filter; returns ``(filter, attempts)``.

    Same retry and duplicate-detection policy as :func:`binfuse.fuse.construct`.
    """
    hashing.check_fingerprint_bits(k)
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    keys = as_key_array(keys)
    array_length = xor_array_length(keys.size)
    rng = np.random.default_rng() if rng is None else rng
    for attempt in range(1, max_attempts + 1):
        seed = draw_seed(rng)
        hashes = _kernels.mix64_many(keys, np.uint64(seed))
        if attempt == DEDUP_AFTER_FAILURES + 1 and has_duplicates(hashes):
            raise DuplicateKeyError(f"input contains duplicate keys (n={keys.size})")
        filt = _xor_from_hashes(hashes, array_length, k, seed)
        if filt is not None:
            return filt, attempt
    raise ConstructionError(f"xor peeling failed {max_attempts} times for n={keys.size}")


def bloom_optimal_hash_count(bits_per_key: float) -> int:
    if bits_per_key <= 0:
        raise ValueError("bits per key must be positive")
    return max(1, round(bits_per_key * math.log(2)))


def bloom_expected_fpp(bits_per_key: float, hash_count: int) -> float:
    return (1.0 - math.exp(-hash_count / bits_per_key)) ** hash_count


class BloomFilter:
    """Bloom filter over a bit array of 64-bit words, with double hashing.

    Mutable while being populated; guard concurrent ``add`` calls externally.
    """

    def __init__(self, bit_count: int, hash_count: int, seed: int, words: np.ndarray | None = None):
        if bit_count < 64 or bit_count % 64:
            raise ConfigurationError("bit count must be a positive multiple of 64")
        if not 1 <= hash_count <= 255:
            raise ConfigurationError(f"hash count must be in [1, 255], got {hash_count}")
        if bit_count >= 2**32:
            raise ConfigurationError("bit count must fit 32-bit range reduction")
        self.bit_count = bit_count
        self.hash_count = hash_count
        self.seed = seed
        if words is None:
            words = np.zeros(bit_count // 64, dtype=np.uint64)
        elif words.shape != (bit_count // 64,):
            raise ConfigurationError("word array does not match the bit count")
        self.words = words

    @classmethod
    def allocate(cls, n: int, bits_per_key: float = 12, hash_count: int | None = None,
                 rng: np.random.Generator | None = None) -> "BloomFilter":
        bits = max(64, math.ceil(bits_per_key * n / 64) * 64)
        if hash_count is None:
            hash_count = bloom_optimal_hash_count(bits_per_key)
        rng = np.random.default_rng() if rng is None else rng
        return cls(bits, hash_count, draw_seed(rng))

    @property
    def storage_bits(self) -> int:
        return self.bit_count

    def add(self, key: int) -> None:
        h = hashing.mix64(int(key), self.seed)
        for idx in hashing.bloom_indexes(h, self.hash_count, self.bit_count):
            self.words[idx >> 6] |= np.uint64(1 << (idx & 63))

    def add_many(self, keys) -> None:
        _kernels.bloom_add_many(
            as_key_array(keys), np.uint64(self.seed), self.words,
            self.hash_count, self.bit_count,
        )

    def contains(self, key: int) -> bool:
        h = hashing.mix64(int(key), self.seed)
        return all(
            (int(self.words[idx >> 6]) >> (idx & 63)) & 1
            for idx in hashing.bloom_indexes(h, self.hash_count, self.bit_count)
        )

    __contains__ = contains

    def contains_many(self, keys) -> np.ndarray:
        return _kernels.bloom_contains_many(
            np.ascontiguousarray(keys, dtype=np.uint64), np.uint64(self.seed),
            self.words, self.hash_count, self.bit_count,
        )

    def count_matches(self, keys: np.ndarray) -> int:
        return int(_kernels.bloom_count_matches(
            keys, np.uint64(self.seed), self.words, self.hash_count, self.bit_count,
        ))

    def popcount(self) -> int:
        return int(np.unpackbits(self.words.view(np.uint8)).sum())

    def __eq__(self, other):
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return (
            self.bit_count == other.bit_count
            and self.hash_count == other.hash_count
            and self.seed == other.seed
            and np.array_equal(self.words, other.words)
        )

    __hash__ = None


def bloom_construct(keys, bits_per_key: float = 12, hash_count: int | None = None,
                    rng: np.random.Generator | None = None) -> BloomFilter:
    keys = as_key_array(keys)
    bloom = BloomFilter.allocate(keys.size, bits_per_key, hash_count, rng)
    bloom.add_many(keys)
    return bloom
