"""Differentially private inner-product channels.

A channel draw is a pair ((x, u), (y, v)): party A holds the sign vector x
and view payload u, party B holds y and v, and v carries the designated
integer output when the channel has one. Samplers are pure functions of
(spec, stream) and accept pinned inputs so privacy audits can fix one
party's vector while the rest of the draw stays fresh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import RandomStream, SignVector, inner_product

CHANNEL_KINDS = (
    "randomized-response",
    "trusted-laplace",
    "split-noise",
    "leaky",
    "wrapped-protocol",
)


class InvalidSpec(ValueError):
    """Channel specification violates a precondition."""


class DegenerateEstimator(InvalidSpec):
    """Estimator denominator is zero (randomized response at eps=0)."""


@dataclass(frozen=True)
class ChannelSpec:
    """Parameters of one channel instance.

    extra carries kind-specific settings: leak_index for the leaky kind,
    protocol for the wrapped-protocol kind.
    """

    kind: str
    n: int
    eps: float
    delta: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise InvalidSpec(f"unknown channel kind {self.kind!r}")
        if self.n < 1:
            raise InvalidSpec("n must be at least 1")
        if self.eps < 0:
            raise InvalidSpec("eps must be nonnegative")
        if not 0 <= self.delta < 1:
            raise InvalidSpec("delta must be in [0, 1)")
        if self.kind == "leaky":
            j = self.extra.get("leak_index")
            if j is None or not 0 <= int(j) < self.n:
                raise InvalidSpec("leaky channel needs extra['leak_index'] in range")


@dataclass(frozen=True)
class ChannelSample:
    """One draw ((x, u), (y, v)) with the designated output out(v)."""

    x: SignVector
    u: dict
    y: SignVector
    v: dict
    out_v: Optional[int]


def recover_output(spec: ChannelSpec, v: dict) -> Optional[int]:
    """Designated output as a function of B's view alone."""
    if spec.kind in ("trusted-laplace", "split-noise", "leaky"):
        return int(v["z"])
    if spec.kind == "randomized-response":
        return int(v["out"])
    if spec.kind == "wrapped-protocol":
        return v["out"]
    return None


# -- discrete Laplace noise ------------------------------------------------
#
# The two-sided geometric with P[k] proportional to e^{-|k|/t} stands in for
# continuous Laplace noise of scale t. Integer support keeps every privacy
# and accuracy check exactly enumerable, and adjacent-point mass ratios are
# exactly e^{1/t}, so sensitivity-2 queries at t = 2/eps are eps-DP.


def dlap_pmf(k: int, scale: float) -> float:
    rho = math.exp(-1.0 / scale)
    return (1.0 - rho) / (1.0 + rho) * rho ** abs(k)


def dlap_tail_above(m: int, scale: float) -> float:
    """P[|N| > m] for m >= 0."""
    rho = math.exp(-1.0 / scale)
    return 2.0 * rho ** (m + 1) / (1.0 + rho)


def dlap_cdf_abs(m: int, scale: float) -> float:
    """P[|N| <= m] for m >= 0."""
    return 1.0 - dlap_tail_above(m, scale)


def dlap_support_radius(scale: float, mass: float = 1e-12) -> int:
    """Smallest radius R with P[|N| > R] <= mass."""
    r = 0
    while dlap_tail_above(r, scale) > mass:
        r += 1
    return r


def sample_dlap(scale: float, stream: RandomStream) -> int:
    return stream.geometric_difference(scale)


# -- samplers ----------------------------------------------------------------


def _draw_inputs(spec, rng, x, y):
    # Draws come sequentially off one per-sample stream; pinned inputs skip
    # their draw.
    xs = x if x is not None else rng.sign_vector(spec.n)
    ys = y if y is not None else rng.sign_vector(spec.n)
    if xs.n != spec.n or ys.n != spec.n:
        raise InvalidSpec("pinned input length does not match spec.n")
    return xs, ys


def rr_keep_probability(eps: float) -> float:
    """Probability that a coordinate is transmitted unflipped."""
    return math.exp(eps) / (1.0 + math.exp(eps))


def sample_randomized_response(
    spec: ChannelSpec, stream: RandomStream, x=None, y=None
) -> ChannelSample:
    """A randomizes each coordinate of x and B estimates the inner product.

    Each transmitted sign equals the true one with probability
    e^eps/(1+e^eps); B debiases by 2p-1 and rounds. The estimate is
    unbiased before rounding.
    """
    if spec.kind != "randomized-response":
        raise InvalidSpec("spec kind mismatch")
    if spec.eps == 0:
        raise DegenerateEstimator("eps=0 makes the debiasing factor zero")
    rng = stream.substream("sample")
    xs, ys = _draw_inputs(spec, rng, x, y)
    p = rr_keep_probability(spec.eps)
    flip_draws = rng.generator.random(spec.n)
    flips = kernels.pack((flip_draws >= p).astype(np.uint8))
    xt = SignVector(kernels.clear_tail(xs.words ^ flips, spec.n), spec.n)
    est = round(inner_product(xt, ys) / (2.0 * p - 1.0))
    u = {}
    v = {"x_tilde": xt, "out": int(est)}
    return ChannelSample(xs, u, ys, v, int(est))


def sample_trusted_laplace(
    spec: ChannelSpec, stream: RandomStream, x=None, y=None
) -> ChannelSample:
    """Both parties see the inner product plus one discrete Laplace draw."""
    if spec.kind != "trusted-laplace":
        raise InvalidSpec("spec kind mismatch")
    if spec.eps <= 0:
        raise InvalidSpec("trusted-laplace needs eps > 0")
    rng = stream.substream("sample")
    xs, ys = _draw_inputs(spec, rng, x, y)
    z = inner_product(xs, ys) + sample_dlap(2.0 / spec.eps, rng)
    return ChannelSample(xs, {"z": z}, ys, {"z": z}, z)


def sample_split_noise(
    spec: ChannelSpec, stream: RandomStream, x=None, y=None
) -> ChannelSample:
    """Additive noise split between the parties: each sees its own share."""
    if spec.kind != "split-noise":
        raise InvalidSpec("spec kind mismatch")
    if spec.eps <= 0:
        raise InvalidSpec("split-noise needs eps > 0")
    rng = stream.substream("sample")
    xs, ys = _draw_inputs(spec, rng, x, y)
    scale = 2.0 / spec.eps
    e_a = sample_dlap(scale, rng)
    e_b = sample_dlap(scale, rng)
    z = inner_product(xs, ys) + e_a + e_b
    return ChannelSample(xs, {"z": z, "e": e_a}, ys, {"z": z, "e": e_b}, z)


def sample_leaky(spec: ChannelSpec, stream: RandomStream, x=None, y=None) -> ChannelSample:
    """Trusted-laplace plus one coordinate of y leaked in the clear to A.

    Negative control for the privacy audit: the leaked coordinate makes A's
    view trivially distinguish neighboring y pairs at that position.
    """
    if spec.kind != "leaky":
        raise InvalidSpec("spec kind mismatch")
    j = int(spec.extra["leak_index"])
    base = sample_trusted_laplace(
        ChannelSpec("trusted-laplace", spec.n, spec.eps, spec.delta), stream, x, y
    )
    u = dict(base.u)
    u["leak"] = base.y[j]
    u["leak_index"] = j
    return ChannelSample(base.x, u, base.y, base.v, base.out_v)


# -- protocol wrapping -------------------------------------------------------


class ProtocolFault(RuntimeError):
    """Wrapped protocol deadlocked or produced a malformed step."""

    def __init__(self, message, transcript_a=(), transcript_b=()):
        super().__init__(message)
        self.transcript_a = tuple(transcript_a)
        self.transcript_b = tuple(transcript_b)


class TwoPartyProtocol:
    """Next-message interface for a two-party protocol on sign-vector inputs.

    next_action receives the party's role ("a" or "b"), its private input,
    the messages received and sent so far, and a randomness stream. It
    returns ("msg", payload) to send a message or ("done", output) to stop.
    """

    max_rounds = 64

    def next_action(self, role, private_input, received, sent, stream):
        raise NotImplementedError


class NoisyEstimateProtocol(TwoPartyProtocol):
    """Test protocol: A reveals x, B replies with a noised inner product.

    Induces the same output distribution as the trusted-laplace channel
    (B's reply is ip + discrete Laplace of scale 2/eps).
    """

    def __init__(self, eps: float):
        self.eps = eps

    def next_action(self, role, private_input, received, sent, stream):
        if role == "a":
            if not sent:
                return ("msg", private_input)
            return ("done", None)
        if not sent and received:
            z = inner_product(received[0], private_input) + sample_dlap(2.0 / self.eps, stream)
            return ("msg", z)
        return ("done", int(sent[0]))


def run_protocol(protocol, x, y, stream):
    """Drive a protocol to completion; returns (received_a, received_b, out_a, out_b)."""
    recv = {"a": [], "b": []}
    sent = {"a": [], "b": []}
    out = {"a": None, "b": None}
    done = {"a": False, "b": False}
    inputs = {"a": x, "b": y}
    other = {"a": "b", "b": "a"}
    turn = "a"
    for _ in range(2 * protocol.max_rounds):
        if done["a"] and done["b"]:
            break
        if done[turn]:
            turn = other[turn]
            continue
        try:
            action = protocol.next_action(
                turn,
                inputs[turn],
                tuple(recv[turn]),
                tuple(sent[turn]),
                stream.substream(turn, len(sent[turn])),
            )
        except Exception as exc:
            raise ProtocolFault(f"party {turn} raised: {exc}", recv["a"], recv["b"]) from exc
        if not (isinstance(action, tuple) and len(action) == 2 and action[0] in ("msg", "done")):
            raise ProtocolFault(f"party {turn} returned malformed step", recv["a"], recv["b"])
        kind, payload = action
        if kind == "msg":
            recv[other[turn]].append(payload)
            sent[turn].append(payload)
        else:
            out[turn] = payload
            done[turn] = True
        turn = other[turn]
    else:
        raise ProtocolFault("deadlock: round limit exceeded", recv["a"], recv["b"])
    return tuple(recv["a"]), tuple(recv["b"]), out["a"], out["b"]


def wrap_protocol(protocol, n: int, stream: RandomStream, x=None, y=None) -> ChannelSample:
    """Run the protocol on uniform inputs and expose it as a uniform channel.

    The parties locally keep their sampled inputs; views are the full
    per-party transcripts and the designated output is B's protocol output.
    The wrapped protocol's accuracy distribution is untouched.
    """
    xs = x if x is not None else stream.substream("x").sign_vector(n)
    ys = y if y is not None else stream.substream("y").sign_vector(n)
    recv_a, recv_b, _, out_b = run_protocol(protocol, xs, ys, stream.substream("proto"))
    u = {"transcript": recv_a}
    v = {"transcript": recv_b, "out": out_b}
    return ChannelSample(xs, u, ys, v, out_b)


def sampler_for(spec: ChannelSpec) -> Callable:
    """Callable (stream, x=None, y=None) -> ChannelSample for the given spec."""
    if spec.kind == "randomized-response":
        fn = sample_randomized_response
    elif spec.kind == "trusted-laplace":
        fn = sample_trusted_laplace
    elif spec.kind == "split-noise":
        fn = sample_split_noise
    elif spec.kind == "leaky":
        fn = sample_leaky
    elif spec.kind == "wrapped-protocol":
        protocol = spec.extra.get("protocol")
        if protocol is None:
            raise InvalidSpec("wrapped-protocol needs extra['protocol']")
        return lambda stream, x=None, y=None: wrap_protocol(protocol, spec.n, stream, x, y)
    else:  # pragma: no cover
        raise InvalidSpec(spec.kind)
    return lambda stream, x=None, y=None: fn(spec, stream, x, y)


# -- exact privacy arithmetic ------------------------------------------------


def max_ratio_additive_noise(spec: ChannelSpec, mass: float = 1e-12) -> float:
    """Max likelihood ratio of the noised-sum view across neighboring inputs.

    Flipping one coordinate of either input shifts the noised sum by 2, so
    the ratio over the truncated noise support is enumerated directly.
    Applies to the trusted-laplace, split-noise and leaky kinds.
    """
    if spec.kind not in ("trusted-laplace", "split-noise", "leaky"):
        raise InvalidSpec("enumeration applies to additive-noise kinds only")
    scale = 2.0 / spec.eps
    radius = dlap_support_radius(scale, mass)
    best = 0.0
    for k in range(-radius, radius + 1):
        q = dlap_pmf(k + 2, scale)
        if q > 0:
            best = max(best, dlap_pmf(k, scale) / q)
    return best


def accuracy_radius(spec: ChannelSpec, confidence: float) -> int:
    """Smallest radius L with P[|out - ip| <= L] >= confidence, by enumeration."""
    if spec.kind == "trusted-laplace" or spec.kind == "leaky":
        scale = 2.0 / spec.eps
        r = 0
        while dlap_cdf_abs(r, scale) < confidence:
            r += 1
        return r
    raise InvalidSpec("closed-form accuracy radius only for single-draw noise kinds")
