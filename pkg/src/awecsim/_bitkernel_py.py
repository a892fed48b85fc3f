"""Pure numpy fallback for the compiled bit kernels.

Same contracts as the compiled module: packed little-endian uint64 words,
tail bits above position n are zero on input and output.
"""

import numpy as np


def popcount(a):
    return int(np.bitwise_count(a).sum())


def popcount_and(a, b):
    return int(np.bitwise_count(a & b).sum())


def popcount_xor(a, b):
    return int(np.bitwise_count(a ^ b).sum())


def popcount_xor_and(a, b, m):
    return int(np.bitwise_count((a ^ b) & m).sum())


def complement(m, n):
    out = ~m
    r = n & 63
    if r and len(out):
        out[-1] &= np.uint64((1 << r) - 1)
    return out


def _unpack(a, n):
    return np.unpackbits(a.view(np.uint8), bitorder="little", count=n)


def _pack(bits):
    packed = np.packbits(bits, bitorder="little")
    nw = max(1, (len(bits) + 63) // 64)
    out = np.zeros(nw, dtype=np.uint64)
    out.view(np.uint8)[: len(packed)] = packed
    return out


def extract(a, m, n):
    sel = _unpack(m, n).astype(bool)
    picked = _unpack(a, n)[sel]
    return _pack(picked), int(len(picked))


def scatter_assign(a, idx, bits):
    # Last write wins for duplicate indices: keep the final occurrence.
    rev_idx = idx[::-1]
    uniq, first = np.unique(rev_idx, return_index=True)
    final_bits = bits[::-1][first]
    words = (uniq >> 6).astype(np.int64)
    shifts = (uniq & 63).astype(np.uint64)
    ones = np.uint64(1) << shifts
    np.bitwise_and.at(a, words, ~ones)
    np.bitwise_or.at(a, words, np.where(final_bits.astype(bool), ones, np.uint64(0)))


def batch_and_popcount(a, masks):
    return np.bitwise_count(a[None, :] & masks).sum(axis=1).astype(np.int64)


def batch_xor_and_popcount(a, b, masks):
    return np.bitwise_count((a ^ b)[None, :] & masks).sum(axis=1).astype(np.int64)
