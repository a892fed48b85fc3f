# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for packed sign vectors.

Vectors over {-1,+1}^n and masks over {0,1}^n are stored as little-endian
bit arrays in numpy uint64 words (bit 1 encodes -1 for sign vectors, 1 for
selected mask positions). All functions assume the unused tail bits of the
last word are zero and preserve that invariant.
"""

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t

cdef extern from *:
    """
    static inline int bk_popcount64(unsigned long long x)
    { return __builtin_popcountll(x); }
    static inline int bk_ctz64(unsigned long long x)
    { return __builtin_ctzll(x); }
    #if defined(__BMI2__)
    #include <immintrin.h>
    static inline unsigned long long bk_extract_word(unsigned long long a,
                                                     unsigned long long m)
    { return _pext_u64(a, m); }
    #else
    /* Portable bit-compaction of a at the set positions of m. */
    static inline unsigned long long bk_extract_word(unsigned long long a,
                                                     unsigned long long m)
    {
        unsigned long long out = 0; int pos = 0;
        while (m) {
            int j = __builtin_ctzll(m);
            m &= m - 1;
            out |= ((a >> j) & 1ULL) << pos;
            pos++;
        }
        return out;
    }
    #endif
    """
    int bk_popcount64(uint64_t x) nogil
    int bk_ctz64(uint64_t x) nogil
    uint64_t bk_extract_word(uint64_t a, uint64_t m) nogil


def popcount(const uint64_t[::1] a):
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += bk_popcount64(a[i])
    return total


def popcount_and(const uint64_t[::1] a, const uint64_t[::1] b):
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += bk_popcount64(a[i] & b[i])
    return total


def popcount_xor(const uint64_t[::1] a, const uint64_t[::1] b):
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += bk_popcount64(a[i] ^ b[i])
    return total


def popcount_xor_and(const uint64_t[::1] a, const uint64_t[::1] b, const uint64_t[::1] m):
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += bk_popcount64((a[i] ^ b[i]) & m[i])
    return total


def complement(const uint64_t[::1] m, Py_ssize_t n):
    """Bitwise NOT of a mask with the tail above bit n cleared."""
    out = np.empty(m.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    cdef int r = n & 63
    with nogil:
        for i in range(m.shape[0]):
            o[i] = ~m[i]
        if r != 0 and m.shape[0] > 0:
            o[m.shape[0] - 1] &= (<uint64_t>1 << r) - 1
    return out


def extract(const uint64_t[::1] a, const uint64_t[::1] m, Py_ssize_t n):
    """Compact the bits of a at the selected positions of m.

    Returns (packed_words, count) where count is the number of selected
    positions; selected bits keep their relative order.
    """
    cdef Py_ssize_t nw = (n + 63) >> 6
    out = np.zeros((n >> 6) + 1, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    cdef int64_t pos = 0
    cdef uint64_t chunk
    cdef int width, lo, fit
    with nogil:
        for i in range(nw):
            width = bk_popcount64(m[i])
            if width == 0:
                continue
            chunk = bk_extract_word(a[i], m[i])
            lo = pos & 63
            o[pos >> 6] |= chunk << lo
            fit = 64 - lo
            if width > fit:
                o[(pos >> 6) + 1] |= chunk >> fit
            pos += width
    cdef Py_ssize_t kw = ((pos + 63) >> 6) if pos else 1
    return np.asarray(out[:kw]).copy(), pos


def scatter_assign(uint64_t[::1] a, const int64_t[::1] idx, const uint8_t[::1] bits):
    """Set bit idx[j] of a to bits[j], applied in order (last write wins)."""
    cdef Py_ssize_t j, w
    cdef int b
    with nogil:
        for j in range(idx.shape[0]):
            w = idx[j] >> 6
            b = idx[j] & 63
            if bits[j]:
                a[w] |= <uint64_t>1 << b
            else:
                a[w] &= ~(<uint64_t>1 << b)


def batch_and_popcount(const uint64_t[::1] a, const uint64_t[:, ::1] masks):
    """Per-row popcount of a & masks[r]."""
    out = np.empty(masks.shape[0], dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t r, i
    cdef int64_t total
    with nogil:
        for r in range(masks.shape[0]):
            total = 0
            for i in range(a.shape[0]):
                total += bk_popcount64(a[i] & masks[r, i])
            o[r] = total
    return out


def batch_xor_and_popcount(const uint64_t[::1] a, const uint64_t[::1] b,
                           const uint64_t[:, ::1] masks):
    """Per-row popcount of (a ^ b) & masks[r]."""
    out = np.empty(masks.shape[0], dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t r, i
    cdef int64_t total
    with nogil:
        for r in range(masks.shape[0]):
            total = 0
            for i in range(a.shape[0]):
                total += bk_popcount64((a[i] ^ b[i]) & masks[r, i])
            o[r] = total
    return out
