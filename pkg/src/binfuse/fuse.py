"""Binary fuse filters with arity 3 or 4.

A filter over ``n`` distinct 64-bit keys is an array of ``k``-bit fingerprints
split into equal power-of-two segments.  Each key touches one slot in each of
``arity`` consecutive segments, and the xor of those slots equals the key's
fingerprint.  Non-members match with probability ``1/2**k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, hashing
from .errors import ConfigurationError, ConstructionError, DuplicateKeyError

DEFAULT_MAX_ATTEMPTS = 100
DEDUP_AFTER_FAILURES = 10
SUPPORTED_ARITIES = (3, 4)

# Sizing constants: (size offset, size slope, reference n, log base, exponent shift)
_SIZING = {
    3: (0.875, 0.25, 1e6, 3.33, 2.25),
    4: (0.77, 0.305, 6e5, 2.91, -0.5),
}


@dataclass(frozen=True)
class FilterLayout:
    arity: int
    segment_length: int
    start_segment_count: int
    array_length: int

    def __post_init__(self):
        if self.arity not in SUPPORTED_ARITIES:
            raise ConfigurationError(f"arity must be 3 or 4, got {self.arity}")
        sl = self.segment_length
        if sl < 1 or sl & (sl - 1) or sl > hashing.MAX_SEGMENT_LENGTH:
            raise ConfigurationError(f"segment length {sl} is not a supported power of two")
        if self.start_segment_count < 1:
            raise ConfigurationError("at least one start segment is required")
        expected = (self.start_segment_count + self.arity - 1) * sl
        if self.array_length != expected:
            raise ConfigurationError(
                f"array length {self.array_length} != (start segments + arity - 1) * segment length = {expected}"
            )

    @property
    def segment_count(self) -> int:
        return self.array_length // self.segment_length


def _check_arity(arity: int) -> None:
    if arity not in SUPPORTED_ARITIES:
        raise ConfigurationError(f"arity must be 3 or 4, got {arity}")


def segment_length_for(n: int, arity: int) -> int:
    _check_arity(arity)
    if n <= 1:
        return 1
    *_, base, shift = _SIZING[arity]
    exponent = math.floor(math.log(n) / math.log(base) + shift)
    return min(1 << max(exponent, 0), hashing.MAX_SEGMENT_LENGTH)


def raw_array_size(n: int, arity: int) -> int:
    """Unrounded fingerprint-array size for ``n`` keys."""
    _check_arity(arity)
    if n <= 1:
        return max(arity, 2 * n)
    offset, slope, ref, *_ = _SIZING[arity]
    factor = offset + slope * max(1.0, math.log(ref) / math.log(n))
    return math.floor(factor * n)


def compute_layout(n: int, arity: int = 3) -> FilterLayout:
    """Segment geometry and array length for a set of ``n`` keys.

    The raw size is rounded up to a whole number of segments, with at least
    ``arity`` segments in total.
    """
    if n < 0:
        raise ValueError(f"set size must be >= 0, got {n}")
    seg_len = segment_length_for(n, arity)
    raw = raw_array_size(n, arity)
    segments = max(-(-raw // seg_len), arity)
    return FilterLayout(
        arity=arity,
        segment_length=seg_len,
        start_segment_count=segments - (arity - 1),
        array_length=segments * seg_len,
    )


def segment_ratio(layout: FilterLayout) -> float:
    return layout.array_length / layout.segment_length


@dataclass(frozen=True)
class ConstructionReport:
    attempts: int
    success: bool
    final_seed: int


@dataclass(frozen=True, eq=False)
class FuseFilter:
    """Immutable binary fuse filter.  Use :func:`construct` to build one."""

    seed: int
    layout: FilterLayout
    fingerprint_bits: int
    fingerprints: np.ndarray

    def __post_init__(self):
        hashing.check_fingerprint_bits(self.fingerprint_bits)
        if self.fingerprints.shape != (self.layout.array_length,):
            raise ConfigurationError("fingerprint array does not match the layout")
        self.fingerprints.flags.writeable = False

    @property
    def arity(self) -> int:
        return self.layout.arity

    def contains(self, key: int) -> bool:
        h = hashing.mix64(int(key), self.seed)
        acc = 0
        for loc in hashing.segment_locations(h, self.layout):
            acc ^= int(self.fingerprints[loc])
        return acc == hashing.fingerprint(h, self.fingerprint_bits)

    __contains__ = contains

    def contains_many(self, keys) -> np.ndarray:
        lay = self.layout
        return _kernels.fuse_contains_many(
            np.ascontiguousarray(keys, dtype=np.uint64), np.uint64(self.seed),
            self.fingerprints, lay.arity, lay.segment_length,
            lay.start_segment_count, self.fingerprint_bits,
        )

    def count_matches(self, keys: np.ndarray) -> int:
        lay = self.layout
        return int(_kernels.fuse_count_matches(
            keys, np.uint64(self.seed), self.fingerprints, lay.arity,
            lay.segment_length, lay.start_segment_count, self.fingerprint_bits,
        ))

    @property
    def array_length(self) -> int:
        return self.layout.array_length

    @property
    def storage_bits(self) -> int:
        return self.layout.array_length * self.fingerprint_bits

    def __eq__(self, other):
        if not isinstance(other, FuseFilter):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.layout == other.layout
            and self.fingerprint_bits == other.fingerprint_bits
            and np.array_equal(self.fingerprints, other.fingerprints)
        )

    def __hash__(self):
        return hash((self.seed, self.layout, self.fingerprint_bits))


def contains(filter: FuseFilter, key: int) -> bool:
    return filter.contains(key)


def bits_per_key(filter, n: int) -> float:
    """Payload storage per key (metadata excluded); accepts any filter kind."""
    if n <= 0:
        raise ValueError("bits per key is undefined for an empty set")
    return filter.storage_bits / n


def fingerprint_dtype(k: int):
    hashing.check_fingerprint_bits(k)
    return np.uint8 if k == 8 else np.uint16


def as_key_array(keys) -> np.ndarray:
    if not isinstance(keys, np.ndarray):
        keys = list(keys)
    return np.ascontiguousarray(keys, dtype=np.uint64)


def draw_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**64, dtype=np.uint64, endpoint=False))


def has_duplicates(hashes: np.ndarray) -> bool:
    s = np.sort(hashes)
    return bool(np.any(s[1:] == s[:-1]))


def try_build(keys: np.ndarray, layout: FilterLayout, k: int, seed: int) -> FuseFilter | None:
    """One peeling attempt under ``seed``; ``None`` if peeling gets stuck."""
    hashes = _kernels.mix64_many(keys, np.uint64(seed))
    return _build_from_hashes(hashes, layout, k, seed)


def _build_from_hashes(hashes, layout, k, seed):
    peeled_hash, peeled_loc, count = _kernels.fuse_peel(
        hashes, layout.arity, layout.segment_length,
        layout.start_segment_count, layout.array_length,
    )
    if count != hashes.size:
        return None
    fps = np.zeros(layout.array_length, dtype=fingerprint_dtype(k))
    _kernels.fuse_assign(
        peeled_hash[:count], peeled_loc[:count], layout.arity,
        layout.segment_length, layout.start_segment_count, k, fps,
    )
    return FuseFilter(seed=seed, layout=layout, fingerprint_bits=k, fingerprints=fps)


def construct(
    keys,
    arity: int = 3,
    k: int = 8,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    rng: np.random.Generator | None = None,
) -> tuple[FuseFilter, ConstructionReport]:
    """Build a binary fuse filter over distinct 64-bit ``keys``.

    Each attempt draws a fresh seed.  After ``DEDUP_AFTER_FAILURES``
    consecutive failures the hashed keys are checked for repeats, which
    raises :class:`DuplicateKeyError`; running out of attempts raises
    :class:`ConstructionError`.
    """
    hashing.check_fingerprint_bits(k)
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    keys = as_key_array(keys)
    layout = compute_layout(keys.size, arity)
    rng = np.random.default_rng() if rng is None else rng
    for attempt in range(1, max_attempts + 1):
        seed = draw_seed(rng)
        hashes = _kernels.mix64_many(keys, np.uint64(seed))
        if attempt == DEDUP_AFTER_FAILURES + 1 and has_duplicates(hashes):
            raise DuplicateKeyError(f"input contains duplicate keys (n={keys.size})")
        filt = _build_from_hashes(hashes, layout, k, seed)
        if filt is not None:
            return filt, ConstructionReport(attempts=attempt, success=True, final_seed=seed)
    raise ConstructionError(f"peeling failed {max_attempts} times for n={keys.size}, arity={arity}")
