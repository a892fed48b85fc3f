"""Domain primitives: sign vectors, index masks, seeded randomness.

Sign vectors live in {-1,+1}^n and are stored packed (bit 1 encodes -1) so
inner products reduce to popcounts. Positions are 0-based everywhere in
code; lengths are fixed at construction and every value type is immutable.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels


class DimensionMismatch(ValueError):
    """Operands of a vector operation have different lengths."""


def _check_same_length(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"length mismatch: {a.n} != {b.n}")


class RandomStream:
    """Deterministic stream of randomness with labeled substreams.

    The same (seed, label path) always yields the same draws, and distinct
    label paths never share a generator state. Substreams are pure
    functions of the path: derive a fresh one per trial rather than reusing
    a stream across protocol invocations. A stream is single-owner;
    parallel work derives one substream per unit of work.
    """

    __slots__ = ("seed", "position", "_entropy", "_rng")

    def __init__(self, seed: int, _entropy: tuple = None):
        self.seed = int(seed)
        self.position = 0
        self._entropy = _entropy if _entropy is not None else (self.seed & 0xFFFFFFFFFFFFFFFF,)
        self._rng = None

    def substream(self, *labels) -> "RandomStream":
        """Independent stream for (seed, path + labels)."""
        entropy = self._entropy
        for label in labels:
            entropy = entropy + _label_words(label)
        child = RandomStream.__new__(RandomStream)
        child.seed = self.seed
        child.position = 0
        child._entropy = entropy
        child._rng = None
        return child

    @property
    def generator(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(list(self._entropy)))
            )
        return self._rng

    def bits(self, n: int) -> np.ndarray:
        """n uniform packed bits."""
        self.position += 1
        return kernels.random_words(n, self.generator)

    def coin(self) -> int:
        self.position += 1
        return int(self.generator.integers(0, 2))

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high] inclusive."""
        self.position += 1
        return int(self.generator.integers(low, high, endpoint=True))

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """Uniform integers in [low, high] inclusive."""
        self.position += 1
        return self.generator.integers(low, high, size=size, endpoint=True, dtype=np.int64)

    def sign_vector(self, n: int) -> "SignVector":
        return SignVector(self.bits(n), n)

    def index_mask(self, n: int) -> "IndexMask":
        return IndexMask(self.bits(n), n)

    def geometric_difference(self, scale: float) -> int:
        """Two-sided geometric draw with P[k] proportional to e^{-|k|/scale}.

        Sampled exactly as the difference of two iid geometric variables
        with success probability 1 - e^{-1/scale}.
        """
        self.position += 1
        p = 1.0 - float(np.exp(-1.0 / scale))
        g1, g2 = self.generator.geometric(p, size=2)
        return int(g1) - int(g2)


def _label_words(label) -> tuple:
    if isinstance(label, int):
        return (1, label & 0xFFFFFFFFFFFFFFFF)
    return _string_label_words(str(label))


@functools.lru_cache(maxsize=4096)
def _string_label_words(label: str) -> tuple:
    digest = hashlib.blake2b(label.encode(), digest_size=8).digest()
    return (2, int.from_bytes(digest, "little"))


class _PackedBits:
    __slots__ = ("_words", "n")

    def __init__(self, words: np.ndarray, n: int):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if len(words) != kernels.words_for(n):
            raise ValueError("packed word count does not match length")
        words.flags.writeable = False
        self._words = words
        self.n = n

    @property
    def words(self) -> np.ndarray:
        return self._words

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        return (
            type(self) is type(other)
            and self.n == other.n
            and bool(np.array_equal(self._words, other._words))
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.n, self._words.tobytes()))


class SignVector(_PackedBits):
    """Immutable vector in {-1,+1}^n, packed one bit per entry."""

    @classmethod
    def from_signs(cls, signs) -> "SignVector":
        arr = np.asarray(list(signs), dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("expected a flat sequence of signs")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("entries must be -1 or +1")
        return cls(kernels.pack(arr < 0), len(arr))

    @classmethod
    def uniform(cls, n: int, stream: RandomStream) -> "SignVector":
        return stream.sign_vector(n)

    def signs(self) -> np.ndarray:
        """Entries as an int8 array of -1/+1 values."""
        return (1 - 2 * kernels.unpack(self._words, self.n)).astype(np.int8)

    def to_tuple(self) -> tuple:
        return tuple(int(v) for v in self.signs())

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"position {i} out of range for length {self.n}")
        return 1 - 2 * kernels.get_bit(self._words, i)

    def __repr__(self) -> str:
        if self.n <= 16:
            return f"SignVector({list(self.signs())})"
        return f"SignVector(n={self.n})"


class IndexMask(_PackedBits):
    """Immutable mask in {0,1}^n; selected positions are the 1-bits."""

    @classmethod
    def from_bits(cls, bits) -> "IndexMask":
        arr = np.asarray(list(bits), dtype=np.int64)
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("mask bits must be 0 or 1")
        return cls(kernels.pack(arr), len(arr))

    @classmethod
    def uniform(cls, n: int, stream: RandomStream) -> "IndexMask":
        return stream.index_mask(n)

    @classmethod
    def zeros(cls, n: int) -> "IndexMask":
        return cls(np.zeros(kernels.words_for(n), dtype=np.uint64), n)

    @classmethod
    def ones(cls, n: int) -> "IndexMask":
        return cls(kernels.complement(np.zeros(kernels.words_for(n), dtype=np.uint64), n), n)

    def count(self) -> int:
        """Number of selected positions."""
        return kernels.popcount(self._words)

    def complement(self) -> "IndexMask":
        return IndexMask(kernels.complement(self._words, self.n), self.n)

    def selected_positions(self) -> np.ndarray:
        return np.flatnonzero(kernels.unpack(self._words, self.n))

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"position {i} out of range for length {self.n}")
        return kernels.get_bit(self._words, i)

    def __repr__(self) -> str:
        if self.n <= 16:
            return f"IndexMask({list(kernels.unpack(self._words, self.n))})"
        return f"IndexMask(n={self.n}, count={self.count()})"


@dataclass(frozen=True)
class FlipSpec:
    """A single-coordinate sign flip of a base vector."""

    base: SignVector
    index: int

    def apply(self) -> SignVector:
        return flip_at(self.base, self.index)


def inner_product(x: SignVector, y: SignVector) -> int:
    """Integer inner product sum(x_i * y_i); exact, in [-n, n]."""
    _check_same_length(x, y)
    return x.n - 2 * kernels.popcount_xor(x.words, y.words)


def masked_inner_product(x: SignVector, y: SignVector, r: IndexMask, selected: bool = True) -> int:
    """Inner product restricted to the selected (or unselected) positions of r."""
    _check_same_length(x, y)
    _check_same_length(x, r)
    m = r.words if selected else kernels.complement(r.words, r.n)
    size = kernels.popcount(m)
    return size - 2 * kernels.popcount_xor_and(x.words, y.words, m)


def extract(x: SignVector, r: IndexMask, selected: bool = True) -> SignVector:
    """Order-preserving subsequence of x at the positions r selects (or not)."""
    _check_same_length(x, r)
    m = r.words if selected else kernels.complement(r.words, r.n)
    words, count = kernels.extract(x.words, m, x.n)
    return SignVector(words, count)


def extract_mask(r: IndexMask, within: IndexMask, selected: bool = True) -> IndexMask:
    """Subsequence of mask r at the positions selected by `within`."""
    _check_same_length(r, within)
    m = within.words if selected else kernels.complement(within.words, within.n)
    words, count = kernels.extract(r.words, m, r.n)
    return IndexMask(words, count)


def flip_at(x: SignVector, i: int) -> SignVector:
    """Copy of x with the sign at position i negated."""
    if not 0 <= i < x.n:
        raise IndexError(f"position {i} out of range for length {x.n}")
    return SignVector(kernels.flip_bit_copy(x.words, i), x.n)


def with_sign_at(x: SignVector, i: int, sign: int) -> SignVector:
    """Copy of x with position i forced to the given sign."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    if not 0 <= i < x.n:
        raise IndexError(f"position {i} out of range for length {x.n}")
    return SignVector(kernels.set_bit_copy(x.words, i, 1 if sign < 0 else 0), x.n)


def insert_sign(x_minus_i: SignVector, i: int, sign: int) -> SignVector:
    """Vector of length n obtained by inserting `sign` at position i."""
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    n = x_minus_i.n + 1
    if not 0 <= i < n:
        raise IndexError(f"position {i} out of range for length {n}")
    bits = kernels.unpack(x_minus_i.words, x_minus_i.n)
    out = np.empty(n, dtype=np.uint8)
    out[:i] = bits[:i]
    out[i] = 1 if sign < 0 else 0
    out[i + 1 :] = bits[i:]
    return SignVector(kernels.pack(out), n)


def remove_at(x: SignVector, i: int) -> SignVector:
    """Vector of length n-1 obtained by deleting position i."""
    if not 0 <= i < x.n:
        raise IndexError(f"position {i} out of range for length {x.n}")
    bits = kernels.unpack(x.words, x.n)
    return SignVector(kernels.pack(np.delete(bits, i)), x.n - 1)


def resample_positions(y: SignVector, indices: np.ndarray, fresh_bits: np.ndarray) -> SignVector:
    """Copy of y where each indices[j] is overwritten by the fresh sign bits[j].

    Duplicates are applied in order, so the last draw for a position wins.
    """
    words = y.words.copy()
    kernels.scatter_assign(
        words,
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(fresh_bits, dtype=np.uint8),
    )
    return SignVector(words, y.n)
