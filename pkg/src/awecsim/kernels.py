"""Packed-bit kernel selection and shared helpers.

The hot operations (popcounts, subset extraction, coordinate scatter) run on
packed uint64 words. A compiled extension is preferred when present; the pure
numpy implementation is selected otherwise, or when AWECSIM_PURE is set.
Both backends are bit-for-bit interchangeable.
"""

import os

import numpy as np

from . import _bitkernel_py

if os.environ.get("AWECSIM_PURE"):
    _impl = _bitkernel_py
    BACKEND = "pure"
else:
    try:
        from . import _bitkernel as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _bitkernel_py
        BACKEND = "pure"

popcount = _impl.popcount
popcount_and = _impl.popcount_and
popcount_xor = _impl.popcount_xor
popcount_xor_and = _impl.popcount_xor_and
complement = _impl.complement
extract = _impl.extract
scatter_assign = _impl.scatter_assign
batch_and_popcount = _impl.batch_and_popcount
batch_xor_and_popcount = _impl.batch_xor_and_popcount


def words_for(n: int) -> int:
    """Number of uint64 words needed for n bits (at least one)."""
    return max(1, (n + 63) // 64)


def clear_tail(words: np.ndarray, n: int) -> np.ndarray:
    """Zero the bits above position n in the last word, in place."""
    r = n & 63
    if r and len(words):
        words[-1] &= np.uint64((1 << r) - 1)
    return words


def random_words(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform packed bit string of length n with a clean tail."""
    w = rng.integers(0, 2**64, size=words_for(n), dtype=np.uint64)
    return clear_tail(w, n)


def unpack(words: np.ndarray, n: int) -> np.ndarray:
    """Expand packed bits into a uint8 array of length n."""
    return np.unpackbits(words.view(np.uint8), bitorder="little", count=n)


def pack(bits) -> np.ndarray:
    """Pack a 0/1 sequence into uint64 words with a clean tail."""
    bits = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    out = np.zeros(words_for(len(bits)), dtype=np.uint64)
    out.view(np.uint8)[: len(packed)] = packed
    return out


def get_bit(words: np.ndarray, i: int) -> int:
    return int((words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))


def flip_bit_copy(words: np.ndarray, i: int) -> np.ndarray:
    out = words.copy()
    out[i >> 6] ^= np.uint64(1) << np.uint64(i & 63)
    return out


def set_bit_copy(words: np.ndarray, i: int, value: int) -> np.ndarray:
    out = words.copy()
    one = np.uint64(1) << np.uint64(i & 63)
    if value:
        out[i >> 6] |= one
    else:
        out[i >> 6] &= ~one
    return out
