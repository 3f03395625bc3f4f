"""Binary fuse filters (3-wise and 4-wise) with xor and Bloom baselines."""

from .baselines import BloomFilter, XorFilter, bloom_construct, bloom_optimal_hash_count, xor_construct
from .errors import (
    ConfigurationError,
    ConstructionError,
    CorruptDataError,
    DuplicateKeyError,
    FilterError,
    FormatError,
    UnsupportedFormatError,
)
from .fuse import (
    ConstructionReport,
    FilterLayout,
    FuseFilter,
    bits_per_key,
    compute_layout,
    construct,
    contains,
    segment_ratio,
)
from .persistence import deserialize, load, save, serialize

__all__ = [
    "BloomFilter",
    "ConfigurationError",
    "ConstructionError",
    "ConstructionReport",
    "CorruptDataError",
    "DuplicateKeyError",
    "FilterError",
    "FilterLayout",
    "FormatError",
    "FuseFilter",
    "UnsupportedFormatError",
    "XorFilter",
    "bits_per_key",
    "bloom_construct",
    "bloom_optimal_hash_count",
    "compute_layout",
    "construct",
    "contains",
    "deserialize",
    "load",
    "save",
    "segment_ratio",
    "serialize",
    "xor_construct",
]
