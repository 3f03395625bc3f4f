import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binfuse import fuse, hashing
from binfuse.errors import ConfigurationError, ConstructionError, DuplicateKeyError
from binfuse.fuse import FilterLayout

import oracles


# -- layout -------------------------------------------------------------------


def test_layout_million_arity3():
    layout = fuse.compute_layout(10**6, 3)
    assert layout.segment_length == 8192
    assert fuse.raw_array_size(10**6, 3) == 1_125_000
    assert layout.array_length == 1_130_496
    assert layout.segment_count == 138
    assert layout.start_segment_count == 136
    assert fuse.segment_ratio(layout) == 138


def test_layout_million_arity4():
    layout = fuse.compute_layout(10**6, 4)
    assert layout.segment_length == 4096
    assert fuse.raw_array_size(10**6, 4) == 1_075_000
    assert layout.array_length == 1_077_248
    assert fuse.segment_ratio(layout) == 263


@pytest.mark.parametrize("arity", [3, 4])
def test_layout_empty_set_is_minimal(arity):
    layout = fuse.compute_layout(0, arity)
    assert layout.start_segment_count == 1
    assert layout.array_length == arity * layout.segment_length
    assert fuse.segment_ratio(layout) == arity


@pytest.mark.parametrize("arity", [3, 4])
def test_layout_matches_formulas(arity):
    # independent evaluation of the sizing table, rounded up to whole segments
    offset, slope, ref, base, shift = {
        3: (0.875, 0.25, 1e6, 3.33, 2.25),
        4: (0.77, 0.305, 6e5, 2.91, -0.5),
    }[arity]
    for n in [2, 7, 100, 999, 12345, 10**5, 314159, 10**6, 2 * 10**7]:
        seg = 2 ** max(0, math.floor(math.log(n, base) + shift))
        raw = math.floor((offset + slope * max(1, math.log(ref) / math.log(n))) * n)
        segments = max(math.ceil(raw / seg), arity)
        layout = fuse.compute_layout(n, arity)
        assert (layout.segment_length, layout.array_length) == (seg, segments * seg), n


@pytest.mark.parametrize("arity", [3, 4])
def test_layout_monotone_in_n(arity):
    ns = np.unique(np.logspace(0, 7, 4000).astype(np.int64))
    lengths = [fuse.compute_layout(int(n), arity).array_length for n in ns]
    assert all(a <= b for a, b in zip(lengths, lengths[1:]))


@pytest.mark.parametrize("arity,bound", [(3, 1.135), (4, 1.085)])
def test_asymptotic_space(arity, bound):
    for n in np.unique(np.logspace(6, 8, 300).astype(np.int64)):
        layout = fuse.compute_layout(int(n), arity)
        assert layout.array_length / n <= bound, n


@pytest.mark.parametrize("arity", [3, 4])
def test_space_within_one_segment_of_raw_size(arity):
    for n in np.unique(np.logspace(0, 8, 2000).astype(np.int64)):
        layout = fuse.compute_layout(int(n), arity)
        raw = fuse.raw_array_size(int(n), arity)
        assert layout.array_length < max(raw, arity * layout.segment_length) + layout.segment_length


@settings(max_examples=200)
@given(st.integers(0, 10**9), st.sampled_from([3, 4]))
def test_layout_invariants(n, arity):
    layout = fuse.compute_layout(n, arity)
    sl = layout.segment_length
    assert sl & (sl - 1) == 0
    assert layout.array_length == (layout.start_segment_count + arity - 1) * sl
    assert layout.start_segment_count >= 1
    assert layout.array_length >= fuse.raw_array_size(n, arity)


def test_small_n_has_larger_bits_per_key():
    big = fuse.compute_layout(10**6, 3).array_length * 8 / 10**6
    small = fuse.compute_layout(10**5, 3).array_length * 8 / 10**5
    assert small > big


def test_invalid_layouts_rejected():
    with pytest.raises(ConfigurationError):
        FilterLayout(arity=5, segment_length=8, start_segment_count=1, array_length=40)
    with pytest.raises(ConfigurationError):
        FilterLayout(arity=3, segment_length=6, start_segment_count=1, array_length=18)
    with pytest.raises(ConfigurationError):
        FilterLayout(arity=3, segment_length=8, start_segment_count=2, array_length=24)
    with pytest.raises(ConfigurationError):
        fuse.compute_layout(10, 2)


# -- construction -------------------------------------------------------------


@pytest.mark.parametrize("arity", [3, 4])
@pytest.mark.parametrize("k", [8, 16])
def test_tiny_set(arity, k):
    filt, report = fuse.construct([1, 2, 3], arity=arity, k=k)
    assert report.success and report.attempts >= 1
    assert all(x in filt for x in (1, 2, 3))
    assert filt.fingerprints.dtype == (np.uint8 if k == 8 else np.uint16)


@pytest.mark.parametrize("arity", [3, 4])
def test_empty_and_singleton(arity):
    empty, report = fuse.construct([], arity=arity)
    assert report.attempts == 1
    assert not empty.fingerprints.any()
    one, _ = fuse.construct([2**64 - 1], arity=arity)
    assert one.contains(2**64 - 1)


@pytest.mark.parametrize("arity", [3, 4])
@pytest.mark.parametrize("n", [2, 10, 100, 1000, 12345])
def test_xor_invariant_sweep(rng, arity, n):
    keys = np.unique(rng.integers(0, 2**64, n, dtype=np.uint64))
    filt, _ = fuse.construct(keys, arity=arity, k=8, rng=rng)
    locate = lambda h: hashing.segment_locations(h, filt.layout)  # noqa: E731
    assert oracles.xor_invariant_holds(filt.fingerprints, keys, filt.seed, locate, 8)
    assert filt.contains_many(keys).all()


def test_scalar_and_batch_queries_agree(rng):
    keys = rng.integers(0, 2**64, 5000, dtype=np.uint64)
    probes = np.concatenate([keys[:500], rng.integers(0, 2**64, 20000, dtype=np.uint64)])
    for arity in (3, 4):
        filt, _ = fuse.construct(keys, arity=arity, k=8, rng=rng)
        batch = filt.contains_many(probes)
        assert [filt.contains(int(p)) for p in probes] == batch.tolist()
        assert filt.count_matches(probes) == batch.sum()
        assert fuse.contains(filt, int(keys[0]))


def test_sequential_keys(rng):
    keys = np.arange(1, 200_001, dtype=np.uint64)
    for arity in (3, 4):
        filt, _ = fuse.construct(keys, arity=arity, rng=rng)
        assert filt.contains_many(keys).all()


def test_filter_is_immutable(rng):
    filt, _ = fuse.construct(np.arange(100, dtype=np.uint64), rng=rng)
    with pytest.raises(ValueError):
        filt.fingerprints[0] = 1
    with pytest.raises(AttributeError):
        filt.seed = 3


def test_duplicate_keys_reported_distinctly(rng):
    keys = np.array([5, 6, 7, 8, 5], dtype=np.uint64)
    with pytest.raises(DuplicateKeyError):
        fuse.construct(keys, rng=rng)


def test_exhausted_attempts_raise_construction_error(rng):
    keys = np.array([5, 6, 7, 5], dtype=np.uint64)
    with pytest.raises(ConstructionError) as info:
        fuse.construct(keys, max_attempts=3, rng=rng)
    assert not isinstance(info.value, DuplicateKeyError)


def test_bad_parameters(rng):
    with pytest.raises(ConfigurationError):
        fuse.construct([1, 2], k=12)
    with pytest.raises(ConfigurationError):
        fuse.construct([1, 2], arity=5)
    with pytest.raises(ValueError):
        fuse.construct([1, 2], max_attempts=0)


def test_retry_draws_fresh_seeds():
    # undersized layouts fail often; each attempt must use a new seed
    rng = np.random.default_rng(3)
    seeds = {fuse.draw_seed(rng) for _ in range(50)}
    assert len(seeds) == 50


# -- peeling vs brute-force oracle --------------------------------------------


def _oracle_case(rng, arity, n, shrink):
    keys = np.unique(rng.integers(0, 2**64, n, dtype=np.uint64))
    layout = fuse.compute_layout(keys.size, arity)
    if shrink:
        # squeeze the array to make peeling failures common
        start = max(1, layout.start_segment_count * 3 // 5)
        layout = FilterLayout(arity, layout.segment_length, start,
                              (start + arity - 1) * layout.segment_length)
    seed = fuse.draw_seed(rng)
    return keys, layout, seed


def test_brute_force_oracle_agrees_with_stack_peeling():
    rng = np.random.default_rng(99)
    outcomes = set()
    for case in range(120):
        arity = 3 + case % 2
        n = int(rng.integers(1, 301))
        keys, layout, seed = _oracle_case(rng, arity, n, shrink=case % 3 == 0)
        locate = lambda h: hashing.segment_locations(h, layout)  # noqa: E731
        hashes = [hashing.mix64(int(k), seed) for k in keys]
        order, ok = oracles.brute_force_peel(hashes, locate, layout.array_length)
        filt = fuse.try_build(keys, layout, 8, seed)
        assert ok == (filt is not None)
        outcomes.add(ok)
        if ok:
            assert oracles.xor_invariant_holds(filt.fingerprints, keys, seed, locate, 8)
            table = oracles.assign_from_order(order, locate, layout.array_length, 8)
            assert oracles.xor_invariant_holds(table, keys, seed, locate, 8)
    assert outcomes == {True, False}


# -- false positives and space ------------------------------------------------


@pytest.mark.parametrize("arity", [3, 4])
def test_fpp_k8(million_keys, ten_million_probes, arity):
    filt, _ = fuse.construct(million_keys, arity=arity, k=8, rng=np.random.default_rng(1))
    rate = filt.count_matches(ten_million_probes) / ten_million_probes.size
    assert abs(rate - 1 / 256) < 0.0002


@pytest.mark.parametrize("arity", [3, 4])
def test_fpp_k16(million_keys, ten_million_probes, arity):
    filt, _ = fuse.construct(million_keys, arity=arity, k=16, rng=np.random.default_rng(2))
    rate = filt.count_matches(ten_million_probes) / ten_million_probes.size
    p = 2.0**-16
    assert abs(rate - p) < oracles.binomial_3sigma(p, ten_million_probes.size)


def test_empty_filter_fpp_matches_epsilon(ten_million_probes):
    filt, _ = fuse.construct([], arity=3, k=8)
    rate = filt.count_matches(ten_million_probes) / ten_million_probes.size
    h = hashing.mix64_array(ten_million_probes, filt.seed)
    assert rate == (hashing.fingerprint_array(h, 8) == 0).mean()
    assert abs(rate - 1 / 256) < oracles.binomial_3sigma(1 / 256, ten_million_probes.size)


def test_bits_per_key():
    keys = np.arange(1, 10**6 + 1, dtype=np.uint64)
    f3, _ = fuse.construct(keys, arity=3, k=8)
    f4, _ = fuse.construct(keys, arity=4, k=8)
    f16, _ = fuse.construct(keys, arity=3, k=16)
    assert fuse.bits_per_key(f3, 10**6) == pytest.approx(9.043968)
    assert fuse.bits_per_key(f4, 10**6) == pytest.approx(8.617984)
    assert fuse.bits_per_key(f16, 10**6) == pytest.approx(18.087936)
    with pytest.raises(ValueError):
        fuse.bits_per_key(f3, 0)


def test_first_attempt_failure_rate_small_sample():
    rng = np.random.default_rng(5)
    for arity in (3, 4):
        layout = fuse.compute_layout(10**4, arity)
        failures = sum(
            fuse.try_build(rng.integers(0, 2**64, 10**4, dtype=np.uint64), layout, 8,
                           fuse.draw_seed(rng)) is None
            for _ in range(200)
        )
        assert failures / 200 < 0.05
