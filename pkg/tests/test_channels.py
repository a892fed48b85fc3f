"""Channel samplers against closed-form and enumeration oracles."""

import math

import numpy as np
import pytest

from awecsim.channels import (
    ChannelSpec,
    DegenerateEstimator,
    InvalidSpec,
    NoisyEstimateProtocol,
    ProtocolFault,
    TwoPartyProtocol,
    accuracy_radius,
    dlap_cdf_abs,
    dlap_pmf,
    dlap_support_radius,
    dlap_tail_above,
    max_ratio_additive_noise,
    recover_output,
    rr_keep_probability,
    sample_leaky,
    sample_randomized_response,
    sample_split_noise,
    sample_trusted_laplace,
    sampler_for,
    wrap_protocol,
)
from awecsim.core import RandomStream, inner_product
from awecsim.stats import chi2_two_sample, clopper_pearson


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        ChannelSpec("unknown", 4, 1.0)
    with pytest.raises(InvalidSpec):
        ChannelSpec("trusted-laplace", 0, 1.0)
    with pytest.raises(InvalidSpec):
        ChannelSpec("trusted-laplace", 4, -1.0)
    with pytest.raises(InvalidSpec):
        ChannelSpec("trusted-laplace", 4, 1.0, delta=1.0)
    with pytest.raises(InvalidSpec):
        ChannelSpec("leaky", 4, 1.0)  # missing leak_index
    with pytest.raises(InvalidSpec):
        ChannelSpec("leaky", 4, 1.0, extra={"leak_index": 9})


# -- discrete Laplace noise ----------------------------------------------------


def test_dlap_pmf_normalizes_and_ratio():
    scale = 2.0
    radius = dlap_support_radius(scale, 1e-13)
    total = sum(dlap_pmf(k, scale) for k in range(-radius, radius + 1))
    assert abs(total - 1.0) < 1e-12
    # adjacent mass ratio is exactly e^{1/scale}
    for k in (0, 1, 5, -3):
        assert dlap_pmf(k, scale) / dlap_pmf(k + 1 if k >= 0 else k - 1, scale) == pytest.approx(
            math.exp(1 / scale)
        )


def test_dlap_tail_matches_enumeration():
    scale = 2.0  # eps = 1
    for m in (0, 1, 5, 14):
        enum = sum(dlap_pmf(k, scale) for k in range(m + 1, m + 400))
        assert dlap_tail_above(m, scale) == pytest.approx(2 * enum, rel=1e-9)
    assert dlap_tail_above(14, scale) < 0.001


def test_dlap_sampler_matches_pmf():
    stream = RandomStream(31)
    scale = 2.0
    draws = [stream.substream(t).geometric_difference(scale) for t in range(40_000)]
    lo, hi = -6, 6
    counts = np.bincount([min(max(d, lo), hi) - lo for d in draws], minlength=hi - lo + 1)
    expected = np.array(
        [
            dlap_tail_above(-lo - 1, scale) / 2
            if v == lo
            else dlap_tail_above(hi - 1, scale) / 2
            if v == hi
            else dlap_pmf(v, scale)
            for v in range(lo, hi + 1)
        ]
    )
    expected = expected * len(draws)
    chi2 = ((counts - expected) ** 2 / expected).sum()
    # 12 dof; chi2 above 40 would be a miss by a wide margin
    assert chi2 < 40


# -- randomized response ---------------------------------------------------------


def test_rr_no_noise_limit():
    spec = ChannelSpec("randomized-response", 32, 50.0)
    stream = RandomStream(8)
    for t in range(20):
        s = sample_randomized_response(spec, stream.substream(t))
        assert s.out_v == inner_product(s.x, s.y)
        assert s.v["x_tilde"] == s.x


def test_rr_eps_zero_degenerate():
    with pytest.raises(DegenerateEstimator):
        sample_randomized_response(ChannelSpec("randomized-response", 4, 0.0), RandomStream(1))


def test_rr_single_coordinate_keep_frequency():
    # Keep probability e/(1+e) at eps=1, checked over 1e6 draws.
    spec = ChannelSpec("randomized-response", 1, 1.0)
    stream = RandomStream(77)
    keeps = 0
    trials = 1_000_000
    for t in range(trials):
        s = sample_randomized_response(spec, stream.substream(t))
        keeps += s.v["x_tilde"][0] == s.x[0]
    lo, hi = clopper_pearson(keeps, trials)
    assert lo <= rr_keep_probability(1.0) <= hi


def test_rr_estimator_std_matches_variance_formula():
    # Debiased-estimator variance n(1-(2p-1)^2)/(2p-1)^2 at eps=1, n=1e4.
    n, eps = 10_000, 1.0
    p = rr_keep_probability(eps)
    oracle_std = math.sqrt(n * (1 - (2 * p - 1) ** 2)) / (2 * p - 1)
    spec = ChannelSpec("randomized-response", n, eps)
    stream = RandomStream(13)
    errs = []
    for t in range(2000):
        s = sample_randomized_response(spec, stream.substream(t))
        errs.append(s.out_v - inner_product(s.x, s.y))
    assert abs(np.std(errs) - oracle_std) <= 0.1 * oracle_std


def test_rr_estimator_unbiased_before_rounding():
    spec = ChannelSpec("randomized-response", 500, 1.0)
    p = rr_keep_probability(1.0)
    stream = RandomStream(6)
    errs = []
    for t in range(4000):
        s = sample_randomized_response(spec, stream.substream(t))
        raw = inner_product(s.v["x_tilde"], s.y) / (2 * p - 1)
        errs.append(raw - inner_product(s.x, s.y))
    assert abs(np.mean(errs)) < 3 * np.std(errs) / math.sqrt(len(errs)) + 0.5


# -- trusted laplace --------------------------------------------------------------


def test_trusted_laplace_residual_distribution():
    spec = ChannelSpec("trusted-laplace", 16, 1.0)
    stream = RandomStream(3)
    residuals = []
    for t in range(30_000):
        s = sample_trusted_laplace(spec, stream.substream(t))
        assert s.u["z"] == s.v["z"] == s.out_v
        residuals.append(s.out_v - inner_product(s.x, s.y))
    assert any(r == 0 for r in residuals)  # zero-noise draws reproduce the ip
    scale = 2.0
    lo, hi = -5, 5
    counts = np.bincount([min(max(r, lo), hi) - lo for r in residuals], minlength=hi - lo + 1)
    expected = np.array(
        [
            dlap_tail_above(-lo - 1, scale) / 2
            if v == lo
            else dlap_tail_above(hi - 1, scale) / 2
            if v == hi
            else dlap_pmf(v, scale)
            for v in range(lo, hi + 1)
        ]
    ) * len(residuals)
    chi2 = ((counts - expected) ** 2 / expected).sum()
    assert chi2 < 40


def test_trusted_laplace_exact_dp_ratio():
    for eps in (0.5, 1.0, 2.0):
        spec = ChannelSpec("trusted-laplace", 8, eps)
        assert max_ratio_additive_noise(spec) <= math.exp(eps) * (1 + 1e-12)
        # the bound is achieved (tight), not just satisfied
        assert max_ratio_additive_noise(spec) >= math.exp(eps) * (1 - 1e-12)


def test_split_noise_exact_dp_ratio():
    for eps in (0.5, 1.0, 2.0):
        spec = ChannelSpec("split-noise", 8, eps)
        assert max_ratio_additive_noise(spec) <= math.exp(eps) * (1 + 1e-12)


def test_trusted_laplace_accuracy_radius():
    spec = ChannelSpec("trusted-laplace", 100, 1.0)
    ell = accuracy_radius(spec, 0.999)
    assert dlap_cdf_abs(ell, 2.0) >= 0.999 > dlap_cdf_abs(ell - 1, 2.0)
    assert ell == 14
    # Monte Carlo agreement at ell=1 against the exact mass
    exact = dlap_cdf_abs(1, 2.0)
    stream = RandomStream(9)
    hits = 0
    trials = 20_000
    for t in range(trials):
        s = sample_trusted_laplace(ChannelSpec("trusted-laplace", 16, 1.0), stream.substream(t))
        hits += abs(s.out_v - inner_product(s.x, s.y)) <= 1
    lo, hi = clopper_pearson(hits, trials)
    assert lo <= exact <= hi


def test_trusted_laplace_requires_positive_eps():
    with pytest.raises(InvalidSpec):
        sample_trusted_laplace(ChannelSpec("trusted-laplace", 4, 0.0), RandomStream(1))


# -- split noise -------------------------------------------------------------------


def test_split_noise_view_identities():
    spec = ChannelSpec("split-noise", 32, 1.0)
    stream = RandomStream(21)
    saw_zero = False
    for t in range(2000):
        s = sample_split_noise(spec, stream.substream(t))
        ip = inner_product(s.x, s.y)
        # u determines z - e_a = ip + e_b on every sample
        assert s.u["z"] - s.u["e"] == ip + s.v["e"]
        assert s.u["z"] == s.v["z"] == s.out_v
        if s.u["e"] == 0 and s.v["e"] == 0:
            saw_zero = True
            assert s.out_v == ip
    assert saw_zero


# -- leaky -------------------------------------------------------------------------


def test_leaky_exposes_coordinate():
    spec = ChannelSpec("leaky", 8, 1.0, extra={"leak_index": 3})
    stream = RandomStream(2)
    for t in range(50):
        s = sample_leaky(spec, stream.substream(t))
        assert s.u["leak"] == s.y[3]
        assert s.u["leak_index"] == 3


# -- designated output --------------------------------------------------------------


@pytest.mark.parametrize(
    "spec",
    [
        ChannelSpec("trusted-laplace", 8, 1.0),
        ChannelSpec("split-noise", 8, 1.0),
        ChannelSpec("leaky", 8, 1.0, extra={"leak_index": 0}),
        ChannelSpec("randomized-response", 8, 1.0),
    ],
)
def test_output_recoverable_from_b_view(spec):
    sampler = sampler_for(spec)
    stream = RandomStream(44)
    for t in range(100):
        s = sampler(stream.substream(t))
        assert recover_output(spec, s.v) == s.out_v


# -- protocol wrapping ----------------------------------------------------------------


def test_wrapped_protocol_matches_trusted_laplace_distribution():
    # Wrapping a one-message noised-estimate protocol reproduces the
    # trusted-laplace accuracy distribution: two-sample test on residuals.
    n, eps, trials = 8, 1.0, 100_000
    proto = NoisyEstimateProtocol(eps)
    direct_spec = ChannelSpec("trusted-laplace", n, eps)
    stream = RandomStream(66)
    lo, hi = -12, 12
    bins = hi - lo + 1

    res_wrap, res_direct = [], []
    corr = 0
    x_first_plus = 0
    for t in range(trials):
        w = wrap_protocol(proto, n, stream.substream("w", t))
        res_wrap.append(min(max(w.out_v - inner_product(w.x, w.y), lo), hi) - lo)
        corr += w.x[0] * w.y[0]
        x_first_plus += w.x[0] == 1
        d = sample_trusted_laplace(direct_spec, stream.substream("d", t))
        res_direct.append(min(max(d.out_v - inner_product(d.x, d.y), lo), hi) - lo)
    p = chi2_two_sample(
        np.bincount(res_wrap, minlength=bins), np.bincount(res_direct, minlength=bins)
    )
    assert p > 0.001
    # joint (x, y) independent and marginals uniform
    assert abs(corr / trials) < 0.01
    plo, phi = clopper_pearson(x_first_plus, trials)
    assert plo <= 0.5 <= phi


def test_wrapped_protocol_views_and_output():
    proto = NoisyEstimateProtocol(1.0)
    s = wrap_protocol(proto, 16, RandomStream(5).substream("w"))
    assert s.v["out"] == s.out_v
    assert s.u["transcript"][-1] == s.out_v  # A saw the estimate
    assert s.v["transcript"][0] == s.x  # B saw A's vector in this test protocol


class _StallingProtocol(TwoPartyProtocol):
    def next_action(self, role, private_input, received, sent, stream):
        return ("msg", "again")


class _MalformedProtocol(TwoPartyProtocol):
    def next_action(self, role, private_input, received, sent, stream):
        return "garbage"


def test_wrapped_protocol_faults():
    with pytest.raises(ProtocolFault):
        wrap_protocol(_StallingProtocol(), 4, RandomStream(1))
    try:
        wrap_protocol(_MalformedProtocol(), 4, RandomStream(1))
    except ProtocolFault as fault:
        assert fault.transcript_a == () and fault.transcript_b == ()
    else:
        pytest.fail("malformed step must raise")


def test_sampler_for_rejects_missing_protocol():
    with pytest.raises(InvalidSpec):
        sampler_for(ChannelSpec("wrapped-protocol", 4, 1.0))
