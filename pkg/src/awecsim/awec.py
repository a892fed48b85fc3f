"""Approximate weak erasure channel built from a DP inner-product channel.

One run: the parties draw a channel sample, A reveals x on a random index
mask, and B flips a fair coin. On tails B reveals the rest of y and outputs
the channel estimate minus the revealed part of the inner product; on heads
B re-randomizes k coordinates of y before revealing, outputs an erasure,
and the injected noise removes B's knowledge of A's output. A always
outputs the inner product of its hidden coordinates with whatever B sent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import (
    IndexMask,
    RandomStream,
    SignVector,
    extract,
    inner_product,
    masked_inner_product,
    resample_positions,
)


class ParameterError(ValueError):
    """AWEC parameters outside the allowed range."""


def noise_index_count(ell: int, eps: float, lambda1: float, lambda2: float) -> int:
    """k = floor(e^(lambda1*eps) * lambda2 * ell^2)."""
    return math.floor(math.exp(lambda1 * eps) * lambda2 * ell * ell)


@dataclass(frozen=True)
class AwecParams:
    """Run parameters; k is derived from (ell, eps, lambda1, lambda2) unless pinned.

    lambda1 and lambda2 calibrate the erasure-noise budget against unknown
    constants of the underlying reconstruction bound, so they are runtime
    configuration. The asymptotic preconditions (eps <= log^0.9 n,
    delta <= 1/(3n), ell up to ~n^(1/6)) are reported as diagnostics, not
    enforced.
    """

    n: int
    ell: int
    eps: float
    lambda1: float = 1.0
    lambda2: float = 10.0
    k_override: Optional[int] = None

    def __post_init__(self):
        if self.ell < 1:
            raise ParameterError("ell must be at least 1")
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        k = self.k
        if k < 1:
            raise ParameterError(f"k={k} must be at least 1")
        if k > self.n:
            raise ParameterError(f"k={k} exceeds n={self.n}")

    @property
    def k(self) -> int:
        if self.k_override is not None:
            return int(self.k_override)
        return noise_index_count(self.ell, self.eps, self.lambda1, self.lambda2)

    def regime_diagnostics(self, delta: float = 0.0) -> dict:
        """Advisory report on the asymptotic hypotheses at these parameters.

        The accuracy-radius ceiling is only known symbolically
        (c1 = lambda1/2 + 1/6 and c2 = sqrt(c/lambda2) for an unquantified
        constant c), so it is reported as a relation, not checked.
        """
        log_n = math.log(self.n) if self.n > 1 else 0.0
        return {
            "eps_within_log_regime": self.eps <= log_n**0.9 if self.n > 1 else False,
            "delta_within_regime": delta <= 1.0 / (3.0 * self.n),
            "k_over_cube_root_n": self.k / self.n ** (1.0 / 3.0),
            "ell_bound_relation": "ell <= sqrt(c/lambda2) * exp(-(lambda1/2 + 1/6)*eps) * n^(1/6), c unquantified",
        }


@dataclass(frozen=True)
class AwecViewA:
    """A's view: its input, channel payload, the mask, and B's reply."""

    x: SignVector
    u: dict
    r: IndexMask
    y_hat_unselected: SignVector


@dataclass(frozen=True)
class AwecViewB:
    """B's view: its input, channel payload, the mask, A's revealed part,
    and (erasure branch only) the noise indices and the noised vector.

    secret_x is always None in protocol runs; simulation harnesses may fill
    it as an explicit side channel for deliberately leaky adversaries.
    """

    y: SignVector
    v: dict
    r: IndexMask
    x_selected: SignVector
    noise_indices: Optional[tuple]
    y_tilde: Optional[SignVector]
    secret_x: Optional[SignVector] = None


@dataclass(frozen=True)
class AwecOutcome:
    o_a: int
    v_a: AwecViewA
    o_b: Optional[int]
    v_b: AwecViewB

    @property
    def erased(self) -> bool:
        return self.o_b is None


def run_awec(sampler, params: AwecParams, stream: RandomStream) -> AwecOutcome:
    """One protocol run over one channel draw.

    Non-erasure branch keeps the exact identity o_a - o_b = <x,y> - out(v);
    it is asserted on every run. The erasure branch resamples k coordinates
    of y uniformly (indices drawn with replacement, last draw wins) before
    revealing the unselected part.
    """
    sample = sampler(stream.substream("channel"))
    if sample.out_v is None:
        raise ParameterError("channel has no designated output")
    if sample.x.n != params.n:
        raise ParameterError("channel size does not match params.n")
    x, y = sample.x, sample.y
    r = stream.substream("mask").index_mask(params.n)
    x_r = extract(x, r, selected=True)
    b = stream.substream("coin").coin()

    if b == 0:
        o_b = sample.out_v - masked_inner_product(x, y, r, selected=True)
        o_a = masked_inner_product(x, y, r, selected=False)
        assert o_a - o_b == inner_product(x, y) - sample.out_v
        v_a = AwecViewA(x, sample.u, r, extract(y, r, selected=False))
        v_b = AwecViewB(y, sample.v, r, x_r, None, None)
        return AwecOutcome(o_a, v_a, o_b, v_b)

    noise = stream.substream("noise")
    k = params.k
    indices = noise.integers(0, params.n - 1, size=k)
    fresh = noise.generator.integers(0, 2, size=k, dtype=np.uint8)
    y_tilde = resample_positions(y, indices, fresh)
    o_a = masked_inner_product(x, y_tilde, r, selected=False)
    v_a = AwecViewA(x, sample.u, r, extract(y_tilde, r, selected=False))
    v_b = AwecViewB(y, sample.v, r, x_r, tuple(indices.tolist()), y_tilde)
    return AwecOutcome(o_a, v_a, None, v_b)


def count_flipped(y: SignVector, y_tilde: SignVector) -> int:
    """Number of positions where the two vectors disagree."""
    if y.n != y_tilde.n:
        raise ValueError(f"length mismatch: {y.n} != {y_tilde.n}")
    return kernels.popcount_xor(y.words, y_tilde.words)


def awec_runner(sampler, params: AwecParams):
    """Callable (stream) -> AwecOutcome with the sampler and params bound."""
    return lambda stream: run_awec(sampler, params, stream)
