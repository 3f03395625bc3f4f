"""Seeded 64-bit key mixing and the mapping of hashes to filter locations.

Every filter in this package hashes a key exactly once, ``h = mix64(key, seed)``,
and derives everything else from ``h``:

* the start segment comes from the top 32 bits of ``h`` (multiply-shift range
  reduction, no division);
* the within-segment offsets come from ``g = fmix64(h + GOLDEN)``, a second
  mixing round, read in disjoint windows: 21-bit windows at shifts 0, 21, 42
  for arity 3; for arity 4, 16-bit windows at shifts 0, 16, 32, 48 while
  segments have at most 2**16 slots.  Larger arity-4 segments exhaust the
  windows, so the fourth offset comes from a multiply remix of ``g``;
* the fingerprint xor-folds the two 32-bit halves of ``h``.

Because the offsets go through an extra bijective mixing round, they are
decorrelated from the fingerprint bits even though both derive from ``h``.

The functions here operate on Python ints (scalar reference path) or on numpy
``uint64`` arrays (``*_array`` variants).  The compiled kernels in
``binfuse._kernels`` reimplement the same arithmetic and are cross-checked
against this module by the test-suite.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

MASK64 = 0xFFFFFFFFFFFFFFFF
MASK32 = 0xFFFFFFFF

FMIX_C1 = 0xFF51AFD7ED558CCD
FMIX_C2 = 0xC4CEB9FE1A85EC53
GOLDEN = 0x9E3779B97F4A7C15

OFFSET_WINDOW = 21
NARROW_WINDOW = 16
MAX_SEGMENT_LENGTH = 1 << 18  # must stay <= 2**OFFSET_WINDOW
SUPPORTED_FINGERPRINT_BITS = (8, 16)


def fmix64(k: int) -> int:
    """Murmur3 64-bit finalizer."""
    k ^= k >> 33
    k = (k * FMIX_C1) & MASK64
    k ^= k >> 33
    k = (k * FMIX_C2) & MASK64
    k ^= k >> 33
    return k


def mix64(key: int, seed: int) -> int:
    """Hash a 64-bit key under ``seed``: ``fmix64(key ^ seed)``."""
    return fmix64((key ^ seed) & MASK64)


def reduce_to_range(x: int, range_: int, width: int = 32) -> int:
    """Map a ``width``-bit integer onto ``[0, range_)`` by multiply-shift."""
    if range_ < 1:
        raise ValueError(f"range must be >= 1, got {range_}")
    return (x * range_) >> width


def check_fingerprint_bits(k: int) -> None:
    if k not in SUPPORTED_FINGERPRINT_BITS:
        raise ConfigurationError(
            f"fingerprint width must be one of {SUPPORTED_FINGERPRINT_BITS}, got {k}"
        )


def fingerprint(h: int, k: int) -> int:
    check_fingerprint_bits(k)
    return (h ^ (h >> 32)) & ((1 << k) - 1)


def start_segment(h: int, start_segment_count: int) -> int:
    return reduce_to_range(h >> 32, start_segment_count)


def segment_locations(h: int, layout) -> tuple[int, ...]:
    """Return the ``layout.arity`` array locations of hash ``h``.

    Location ``i`` lies in segment ``start + i``.  ``layout`` is any object with
    ``arity``, ``segment_length`` and ``start_segment_count`` attributes.
    """
    seg_len = layout.segment_length
    mask = seg_len - 1
    base = start_segment(h, layout.start_segment_count) * seg_len
    g = fmix64((h + GOLDEN) & MASK64)
    if layout.arity == 4 and seg_len <= 1 << NARROW_WINDOW:
        return tuple(base + i * seg_len + ((g >> (i * NARROW_WINDOW)) & mask) for i in range(4))
    locs = [
        base + (g & mask),
        base + seg_len + ((g >> OFFSET_WINDOW) & mask),
        base + 2 * seg_len + ((g >> (2 * OFFSET_WINDOW)) & mask),
    ]
    if layout.arity == 4:
        g2 = ((g ^ (g >> 32)) * GOLDEN) & MASK64
        locs.append(base + 3 * seg_len + ((g2 >> 32) & mask))
    return tuple(locs)


def xor_locations(h: int, block_length: int) -> tuple[int, int, int]:
    """Locations of ``h`` in the three equal blocks of an xor filter."""
    g = fmix64((h + GOLDEN) & MASK64)
    return (
        reduce_to_range(h >> 32, block_length),
        block_length + reduce_to_range(g & MASK32, block_length),
        2 * block_length + reduce_to_range(g >> 32, block_length),
    )


def bloom_indexes(h: int, hash_count: int, bit_count: int) -> list[int]:
    """Double hashing: ``g_i = h1 + i*h2 mod 2**32`` reduced onto ``bit_count``."""
    h1 = h & MASK32
    h2 = h >> 32
    return [
        reduce_to_range((h1 + i * h2) & MASK32, bit_count) for i in range(hash_count)
    ]


# -- numpy array variants ---------------------------------------------------

_U33 = np.uint64(33)


def fmix64_array(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.uint64).copy()
    k ^= k >> _U33
    k *= np.uint64(FMIX_C1)
    k ^= k >> _U33
    k *= np.uint64(FMIX_C2)
    k ^= k >> _U33
    return k


def mix64_array(keys, seed: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    return fmix64_array(keys ^ np.uint64(seed))


def reduce_to_range_array(x: np.ndarray, range_: int) -> np.ndarray:
    """32-bit multiply-shift on an array whose values are below ``2**32``."""
    if range_ < 1:
        raise ValueError(f"range must be >= 1, got {range_}")
    return (np.asarray(x, dtype=np.uint64) * np.uint64(range_)) >> np.uint64(32)


def fingerprint_array(h: np.ndarray, k: int) -> np.ndarray:
    check_fingerprint_bits(k)
    h = np.asarray(h, dtype=np.uint64)
    return (h ^ (h >> np.uint64(32))) & np.uint64((1 << k) - 1)


def segment_locations_array(h: np.ndarray, layout) -> np.ndarray:
    """Vectorized :func:`segment_locations`; returns shape ``(len(h), arity)``."""
    h = np.asarray(h, dtype=np.uint64)
    seg_len = np.uint64(layout.segment_length)
    mask = np.uint64(layout.segment_length - 1)
    base = reduce_to_range_array(h >> np.uint64(32), layout.start_segment_count) * seg_len
    g = fmix64_array(h + np.uint64(GOLDEN))
    if layout.arity == 4 and layout.segment_length <= 1 << NARROW_WINDOW:
        cols = [
            base + np.uint64(i) * seg_len + ((g >> np.uint64(i * NARROW_WINDOW)) & mask)
            for i in range(4)
        ]
        return np.stack(cols, axis=1)
    cols = [
        base + (g & mask),
        base + seg_len + ((g >> np.uint64(OFFSET_WINDOW)) & mask),
        base + np.uint64(2) * seg_len + ((g >> np.uint64(2 * OFFSET_WINDOW)) & mask),
    ]
    if layout.arity == 4:
        g2 = (g ^ (g >> np.uint64(32))) * np.uint64(GOLDEN)
        cols.append(base + np.uint64(3) * seg_len + ((g2 >> np.uint64(32)) & mask))
    return np.stack(cols, axis=1)
