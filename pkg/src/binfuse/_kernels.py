"""Compiled inner loops (numba) for hashing, peeling and batch queries.

The arithmetic mirrors ``binfuse.hashing`` bit for bit.  Every constant is a
``np.uint64`` so that numba never promotes mixed signed/unsigned arithmetic to
float64.
"""

import numpy as np
from numba import njit

from .hashing import FMIX_C1, FMIX_C2, GOLDEN, NARROW_WINDOW, OFFSET_WINDOW

_C1 = np.uint64(FMIX_C1)
_C2 = np.uint64(FMIX_C2)
_GOLDEN = np.uint64(GOLDEN)
_S21 = np.uint64(OFFSET_WINDOW)
_S42 = np.uint64(2 * OFFSET_WINDOW)
_S16 = np.uint64(NARROW_WINDOW)
_S32 = np.uint64(2 * NARROW_WINDOW)
_S48 = np.uint64(3 * NARROW_WINDOW)
_NARROW_LIMIT = np.uint64(1 << NARROW_WINDOW)
_S33 = np.uint64(33)
_LO32 = np.uint64(0xFFFFFFFF)
_ZERO = np.uint64(0)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_THREE = np.uint64(3)

BLOOM_BATCH = 256

# Query loops read the fingerprint array themselves: handing the array to a
# per-key helper costs a refcount round trip per call, roughly quadrupling
# query time, so helpers only ever see scalars.


@njit(cache=True)
def fmix64(k):
    k ^= k >> _S33
    k *= _C1
    k ^= k >> _S33
    k *= _C2
    k ^= k >> _S33
    return k


@njit(cache=True)
def mix64(key, seed):
    return fmix64(key ^ seed)


@njit(cache=True)
def mix64_many(keys, seed):
    out = np.empty(keys.size, dtype=np.uint64)
    for i in range(keys.size):
        out[i] = fmix64(keys[i] ^ seed)
    return out


@njit(cache=True)
def fingerprint(h, fp_mask):
    return (h ^ (h >> _S32)) & fp_mask


@njit(cache=True)
def start_segment(h, start_count):
    return ((h >> _S32) * start_count) >> _S32


@njit(cache=True)
def fuse_locations(h, arity, seg_len, start_count):
    """Return four locations; the fourth is meaningful only when arity == 4."""
    mask = seg_len - _ONE
    base = start_segment(h, start_count) * seg_len
    g = fmix64(h + _GOLDEN)
    if arity == 4 and seg_len <= _NARROW_LIMIT:
        l0 = base + (g & mask)
        l1 = base + seg_len + ((g >> _S16) & mask)
        l2 = base + _TWO * seg_len + ((g >> _S32) & mask)
        l3 = base + _THREE * seg_len + ((g >> _S48) & mask)
        return l0, l1, l2, l3
    l0 = base + (g & mask)
    l1 = base + seg_len + ((g >> _S21) & mask)
    l2 = base + _TWO * seg_len + ((g >> _S42) & mask)
    l3 = _ZERO
    if arity == 4:
        g2 = (g ^ (g >> _S32)) * _GOLDEN
        l3 = base + _THREE * seg_len + ((g2 >> _S32) & mask)
    return l0, l1, l2, l3


@njit(cache=True)
def xor_locations(h, block_length):
    g = fmix64(h + _GOLDEN)
    l0 = ((h >> _S32) * block_length) >> _S32
    l1 = block_length + (((g & _LO32) * block_length) >> _S32)
    l2 = _TWO * block_length + (((g >> _S32) * block_length) >> _S32)
    return l0, l1, l2


# -- binary fuse construction ----------------------------------------------


@njit(cache=True)
def sort_by_start_segment(hashes, start_count):
    """Counting sort of ``hashes`` on their start segment, one linear pass."""
    n = hashes.size
    sc = np.uint64(start_count)
    bucket_start = np.zeros(start_count + 1, dtype=np.int64)
    segs = np.empty(n, dtype=np.int64)
    for i in range(n):
        s = np.int64(start_segment(hashes[i], sc))
        segs[i] = s
        bucket_start[s + 1] += 1
    for s in range(start_count):
        bucket_start[s + 1] += bucket_start[s]
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        s = segs[i]
        out[bucket_start[s]] = hashes[i]
        bucket_start[s] += 1
    return out


@njit(cache=True)
def fuse_peel(hashes, arity, seg_len, start_count, array_length):
    """Peel the hypergraph of ``hashes``.

    Returns ``(peeled_hashes, peeled_locations, count)`` where the first
    ``count`` entries form the stack P.  Construction succeeded iff
    ``count == hashes.size``.
    """
    n = hashes.size
    sl = np.uint64(seg_len)
    sc = np.uint64(start_count)
    ordered = sort_by_start_segment(hashes, start_count)

    cell_count = np.zeros(array_length, dtype=np.uint32)
    cell_mask = np.zeros(array_length, dtype=np.uint64)
    for j in range(n):
        h = ordered[j]
        l0, l1, l2, l3 = fuse_locations(h, arity, sl, sc)
        cell_count[l0] += 1
        cell_mask[l0] ^= h
        cell_count[l1] += 1
        cell_mask[l1] ^= h
        cell_count[l2] += 1
        cell_mask[l2] ^= h
        if arity == 4:
            cell_count[l3] += 1
            cell_mask[l3] ^= h

    # each cell is pushed at most once, so array_length bounds the stack
    queue = np.empty(array_length, dtype=np.int64)
    qsize = 0
    for i in range(array_length):
        if cell_count[i] == 1:
            queue[qsize] = i
            qsize += 1

    peeled_hash = np.empty(n, dtype=np.uint64)
    peeled_loc = np.empty(n, dtype=np.int64)
    psize = 0
    locs = np.empty(4, dtype=np.uint64)
    while qsize > 0:
        qsize -= 1
        i = queue[qsize]
        if cell_count[i] != 1:
            continue
        h = cell_mask[i]
        peeled_hash[psize] = h
        peeled_loc[psize] = i
        psize += 1
        l0, l1, l2, l3 = fuse_locations(h, arity, sl, sc)
        locs[0] = l0
        locs[1] = l1
        locs[2] = l2
        locs[3] = l3
        for t in range(arity):
            loc = locs[t]
            cell_count[loc] -= 1
            cell_mask[loc] ^= h
            if cell_count[loc] == 1:
                queue[qsize] = np.int64(loc)
                qsize += 1
    return peeled_hash, peeled_loc, psize


@njit(cache=True)
def fuse_assign(peeled_hash, peeled_loc, arity, seg_len, start_count, fp_bits, fingerprints):
    """Unwind stack P, fixing one slot per key so the xor invariant holds."""
    sl = np.uint64(seg_len)
    sc = np.uint64(start_count)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    for j in range(peeled_hash.size - 1, -1, -1):
        h = peeled_hash[j]
        l0, l1, l2, l3 = fuse_locations(h, arity, sl, sc)
        v = fingerprint(h, fp_mask)
        v ^= np.uint64(fingerprints[l0]) ^ np.uint64(fingerprints[l1]) ^ np.uint64(fingerprints[l2])
        if arity == 4:
            v ^= np.uint64(fingerprints[l3])
        # the slot being set is still zero, so including it above is harmless
        fingerprints[peeled_loc[j]] = v


# The query loops below are written once per location scheme so that the
# arity and window-width decisions are made per batch, not per key.


@njit(cache=True)
def fuse_probe3(key, seed, seg_len, start_count, fp_mask):
    h = fmix64(key ^ seed)
    mask = seg_len - _ONE
    base = start_segment(h, start_count) * seg_len
    g = fmix64(h + _GOLDEN)
    return (
        base + (g & mask),
        base + seg_len + ((g >> _S21) & mask),
        base + _TWO * seg_len + ((g >> _S42) & mask),
        fingerprint(h, fp_mask),
    )


@njit(cache=True)
def fuse_probe4_narrow(key, seed, seg_len, start_count, fp_mask):
    h = fmix64(key ^ seed)
    mask = seg_len - _ONE
    base = start_segment(h, start_count) * seg_len
    g = fmix64(h + _GOLDEN)
    return (
        base + (g & mask),
        base + seg_len + ((g >> _S16) & mask),
        base + _TWO * seg_len + ((g >> _S32) & mask),
        base + _THREE * seg_len + ((g >> _S48) & mask),
        fingerprint(h, fp_mask),
    )


@njit(cache=True)
def fuse_probe4_wide(key, seed, seg_len, start_count, fp_mask):
    h = fmix64(key ^ seed)
    mask = seg_len - _ONE
    base = start_segment(h, start_count) * seg_len
    g = fmix64(h + _GOLDEN)
    g2 = (g ^ (g >> _S32)) * _GOLDEN
    return (
        base + (g & mask),
        base + seg_len + ((g >> _S21) & mask),
        base + _TWO * seg_len + ((g >> _S42) & mask),
        base + _THREE * seg_len + ((g2 >> _S32) & mask),
        fingerprint(h, fp_mask),
    )


@njit(cache=True)
def _count3(keys, seed, fps, sl, sc, fp_mask):
    matches = 0
    for i in range(keys.size):
        l0, l1, l2, fp = fuse_probe3(keys[i], seed, sl, sc, fp_mask)
        if (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])) == fp:
            matches += 1
    return matches


@njit(cache=True)
def _count4_narrow(keys, seed, fps, sl, sc, fp_mask):
    matches = 0
    for i in range(keys.size):
        l0, l1, l2, l3, fp = fuse_probe4_narrow(keys[i], seed, sl, sc, fp_mask)
        if (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])
                ^ np.uint64(fps[l3])) == fp:
            matches += 1
    return matches


@njit(cache=True)
def _count4_wide(keys, seed, fps, sl, sc, fp_mask):
    matches = 0
    for i in range(keys.size):
        l0, l1, l2, l3, fp = fuse_probe4_wide(keys[i], seed, sl, sc, fp_mask)
        if (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])
                ^ np.uint64(fps[l3])) == fp:
            matches += 1
    return matches


@njit(cache=True)
def _contains3(keys, seed, fps, sl, sc, fp_mask, out):
    for i in range(keys.size):
        l0, l1, l2, fp = fuse_probe3(keys[i], seed, sl, sc, fp_mask)
        out[i] = (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])) == fp


@njit(cache=True)
def _contains4_narrow(keys, seed, fps, sl, sc, fp_mask, out):
    for i in range(keys.size):
        l0, l1, l2, l3, fp = fuse_probe4_narrow(keys[i], seed, sl, sc, fp_mask)
        out[i] = (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])
                  ^ np.uint64(fps[l3])) == fp


@njit(cache=True)
def _contains4_wide(keys, seed, fps, sl, sc, fp_mask, out):
    for i in range(keys.size):
        l0, l1, l2, l3, fp = fuse_probe4_wide(keys[i], seed, sl, sc, fp_mask)
        out[i] = (np.uint64(fps[l0]) ^ np.uint64(fps[l1]) ^ np.uint64(fps[l2])
                  ^ np.uint64(fps[l3])) == fp


@njit(cache=True)
def fuse_contains_many(keys, seed, fingerprints, arity, seg_len, start_count, fp_bits):
    sl = np.uint64(seg_len)
    sc = np.uint64(start_count)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    out = np.empty(keys.size, dtype=np.bool_)
    if arity == 3:
        _contains3(keys, seed, fingerprints, sl, sc, fp_mask, out)
    elif sl <= _NARROW_LIMIT:
        _contains4_narrow(keys, seed, fingerprints, sl, sc, fp_mask, out)
    else:
        _contains4_wide(keys, seed, fingerprints, sl, sc, fp_mask, out)
    return out


@njit(cache=True)
def fuse_count_matches(keys, seed, fingerprints, arity, seg_len, start_count, fp_bits):
    sl = np.uint64(seg_len)
    sc = np.uint64(start_count)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    if arity == 3:
        return _count3(keys, seed, fingerprints, sl, sc, fp_mask)
    if sl <= _NARROW_LIMIT:
        return _count4_narrow(keys, seed, fingerprints, sl, sc, fp_mask)
    return _count4_wide(keys, seed, fingerprints, sl, sc, fp_mask)


# -- xor filter ---------------------------------------------------------------


@njit(cache=True)
def xor_peel(hashes, block_length):
    n = hashes.size
    bl = np.uint64(block_length)
    array_length = 3 * block_length
    cell_count = np.zeros(array_length, dtype=np.uint32)
    cell_mask = np.zeros(array_length, dtype=np.uint64)
    for j in range(n):
        h = hashes[j]
        l0, l1, l2 = xor_locations(h, bl)
        cell_count[l0] += 1
        cell_mask[l0] ^= h
        cell_count[l1] += 1
        cell_mask[l1] ^= h
        cell_count[l2] += 1
        cell_mask[l2] ^= h

    queue = np.empty(array_length, dtype=np.int64)
    qsize = 0
    for i in range(array_length):
        if cell_count[i] == 1:
            queue[qsize] = i
            qsize += 1

    peeled_hash = np.empty(n, dtype=np.uint64)
    peeled_loc = np.empty(n, dtype=np.int64)
    psize = 0
    locs = np.empty(3, dtype=np.uint64)
    while qsize > 0:
        qsize -= 1
        i = queue[qsize]
        if cell_count[i] != 1:
            continue
        h = cell_mask[i]
        peeled_hash[psize] = h
        peeled_loc[psize] = i
        psize += 1
        l0, l1, l2 = xor_locations(h, bl)
        locs[0] = l0
        locs[1] = l1
        locs[2] = l2
        for t in range(3):
            loc = locs[t]
            cell_count[loc] -= 1
            cell_mask[loc] ^= h
            if cell_count[loc] == 1:
                queue[qsize] = np.int64(loc)
                qsize += 1
    return peeled_hash, peeled_loc, psize


@njit(cache=True)
def xor_assign(peeled_hash, peeled_loc, block_length, fp_bits, fingerprints):
    bl = np.uint64(block_length)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    for j in range(peeled_hash.size - 1, -1, -1):
        h = peeled_hash[j]
        l0, l1, l2 = xor_locations(h, bl)
        v = fingerprint(h, fp_mask)
        v ^= np.uint64(fingerprints[l0]) ^ np.uint64(fingerprints[l1]) ^ np.uint64(fingerprints[l2])
        fingerprints[peeled_loc[j]] = v


@njit(cache=True)
def xor_probe(key, seed, block_length, fp_mask):
    h = fmix64(key ^ seed)
    l0, l1, l2 = xor_locations(h, block_length)
    return l0, l1, l2, fingerprint(h, fp_mask)


@njit(cache=True)
def xor_contains_many(keys, seed, fingerprints, block_length, fp_bits):
    bl = np.uint64(block_length)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    out = np.empty(keys.size, dtype=np.bool_)
    for i in range(keys.size):
        l0, l1, l2, fp = xor_probe(keys[i], seed, bl, fp_mask)
        v = np.uint64(fingerprints[l0]) ^ np.uint64(fingerprints[l1]) ^ np.uint64(fingerprints[l2])
        out[i] = v == fp
    return out


@njit(cache=True)
def xor_count_matches(keys, seed, fingerprints, block_length, fp_bits):
    bl = np.uint64(block_length)
    fp_mask = np.uint64((1 << fp_bits) - 1)
    matches = 0
    for i in range(keys.size):
        l0, l1, l2, fp = xor_probe(keys[i], seed, bl, fp_mask)
        v = np.uint64(fingerprints[l0]) ^ np.uint64(fingerprints[l1]) ^ np.uint64(fingerprints[l2])
        if v == fp:
            matches += 1
    return matches


# -- Bloom filter -------------------------------------------------------------


@njit(cache=True)
def bloom_index(h1, h2, i, bit_count):
    g = (h1 + np.uint64(i) * h2) & _LO32
    return (g * bit_count) >> _S32


@njit(cache=True)
def bloom_add_many(keys, seed, words, hash_count, bit_count):
    """Hash a batch of keys into a scratch buffer, then set the bits."""
    m = np.uint64(bit_count)
    buf = np.empty(BLOOM_BATCH * hash_count, dtype=np.uint64)
    n = keys.size
    for start in range(0, n, BLOOM_BATCH):
        stop = min(start + BLOOM_BATCH, n)
        t = 0
        for j in range(start, stop):
            h = fmix64(keys[j] ^ seed)
            h1 = h & _LO32
            h2 = h >> _S32
            for i in range(hash_count):
                buf[t] = bloom_index(h1, h2, i, m)
                t += 1
        for u in range(t):
            idx = buf[u]
            words[idx >> np.uint64(6)] |= _ONE << (idx & np.uint64(63))


@njit(cache=True)
def bloom_contains_many(keys, seed, words, hash_count, bit_count):
    m = np.uint64(bit_count)
    out = np.empty(keys.size, dtype=np.bool_)
    for j in range(keys.size):
        h = fmix64(keys[j] ^ seed)
        h1 = h & _LO32
        h2 = h >> _S32
        hit = True
        for i in range(hash_count):
            idx = bloom_index(h1, h2, i, m)
            if (words[idx >> np.uint64(6)] >> (idx & np.uint64(63))) & _ONE == _ZERO:
                hit = False
                break
        out[j] = hit
    return out


@njit(cache=True)
def bloom_count_matches(keys, seed, words, hash_count, bit_count):
    m = np.uint64(bit_count)
    matches = 0
    for j in range(keys.size):
        h = fmix64(keys[j] ^ seed)
        h1 = h & _LO32
        h2 = h >> _S32
        hit = True
        for i in range(hash_count):
            idx = bloom_index(h1, h2, i, m)
            if (words[idx >> np.uint64(6)] >> (idx & np.uint64(63))) & _ONE == _ZERO:
                hit = False
                break
        if hit:
            matches += 1
    return matches
