"""Binary envelope for fuse, xor and Bloom filters.

All integers are little-endian.  The header is a fixed 48 bytes:

======  =====  ===========================================================
offset  size   field
======  =====  ===========================================================
0       8      magic ``b"BINFUSE\\x00"``
8       2      format version (currently 1)
10      1      filter kind: 1 = fuse3, 2 = fuse4, 3 = xor3, 4 = bloom
11      1      fingerprint bits (fuse, xor) or hash count (bloom)
12      4      reserved, must be zero
16      8      seed
24      8      fuse: segment length; xor: block length; bloom: bit count
32      8      fuse: start segment count; xor, bloom: zero
40      8      fuse, xor: array length (slots); bloom: word count
======  =====  ===========================================================

The payload follows immediately: ``array_length * bits / 8`` bytes of
fingerprints, or ``bit_count / 8`` bytes of Bloom bits (as 64-bit words).
"""

from __future__ import annotations

import struct
from enum import IntEnum

import numpy as np

from .baselines import BloomFilter, XorFilter
from .errors import ConfigurationError, CorruptDataError, FormatError, UnsupportedFormatError
from .fuse import FilterLayout, FuseFilter, fingerprint_dtype

MAGIC = b"BINFUSE\x00"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sHBBIQQQQ")
HEADER_SIZE = HEADER.size


class FilterKind(IntEnum):
    FUSE3 = 1
    FUSE4 = 2
    XOR3 = 3
    BLOOM = 4


def filter_kind(filter) -> FilterKind:
    if isinstance(filter, FuseFilter):
        return FilterKind.FUSE3 if filter.arity == 3 else FilterKind.FUSE4
    if isinstance(filter, XorFilter):
        return FilterKind.XOR3
    if isinstance(filter, BloomFilter):
        return FilterKind.BLOOM
    raise TypeError(f"cannot serialize {type(filter).__name__}")


def serialize(filter) -> bytes:
    kind = filter_kind(filter)
    if kind is FilterKind.BLOOM:
        header = HEADER.pack(MAGIC, FORMAT_VERSION, kind, filter.hash_count, 0,
                             filter.seed, filter.bit_count, 0, filter.words.size)
        return header + filter.words.astype("<u8", copy=False).tobytes()
    if kind is FilterKind.XOR3:
        a, b = filter.block_length, 0
    else:
        a, b = filter.layout.segment_length, filter.layout.start_segment_count
    header = HEADER.pack(MAGIC, FORMAT_VERSION, kind, filter.fingerprint_bits, 0,
                         filter.seed, a, b, filter.array_length)
    dtype = np.dtype(fingerprint_dtype(filter.fingerprint_bits)).newbyteorder("<")
    return header + filter.fingerprints.astype(dtype, copy=False).tobytes()


def deserialize(data: bytes):
    data = memoryview(data)
    if len(data) < len(MAGIC) or bytes(data[: len(MAGIC)]) != MAGIC:
        raise FormatError("not a binfuse filter (bad magic)")
    if len(data) < HEADER_SIZE:
        raise CorruptDataError(f"header truncated: {len(data)} < {HEADER_SIZE} bytes")
    _, version, kind, width, reserved, seed, a, b, c = HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"unsupported format version {version}")
    try:
        kind = FilterKind(kind)
    except ValueError:
        raise UnsupportedFormatError(f"unknown filter kind {kind}") from None
    if reserved:
        raise CorruptDataError("reserved header bytes are not zero")
    payload = data[HEADER_SIZE:]

    try:
        if kind is FilterKind.BLOOM:
            _expect_payload(payload, 8 * c)
            words = np.frombuffer(payload, dtype="<u8").astype(np.uint64)
            return BloomFilter(bit_count=a, hash_count=width, seed=seed, words=words)

        dtype = np.dtype(fingerprint_dtype(width)).newbyteorder("<")
        _expect_payload(payload, c * dtype.itemsize)
        fps = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
        if kind is FilterKind.XOR3:
            if a * 3 != c or b:
                raise CorruptDataError("xor block length disagrees with array length")
            return XorFilter(seed=seed, array_length=c, fingerprint_bits=width, fingerprints=fps)
        layout = FilterLayout(arity=3 if kind is FilterKind.FUSE3 else 4,
                              segment_length=a, start_segment_count=b, array_length=c)
        return FuseFilter(seed=seed, layout=layout, fingerprint_bits=width, fingerprints=fps)
    except ConfigurationError as exc:
        raise CorruptDataError(f"inconsistent header: {exc}") from exc


def _expect_payload(payload, expected: int) -> None:
    if len(payload) < expected:
        raise CorruptDataError(f"payload truncated: {len(payload)} < {expected} bytes")
    if len(payload) > expected:
        raise CorruptDataError(f"{len(payload) - expected} unexpected trailing bytes")


def save(filter, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(filter))


def load(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())
