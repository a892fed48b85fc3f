"""Attack algorithms against enumeration oracles and analytic rates."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awecsim.attacks import (
    CapacityError,
    ExactAgreementOracle,
    FnMaskOracle,
    GenViewError,
    MaskOracle,
    PredictorParams,
    QueryBudgetExceeded,
    ReferenceDist,
    RevealedMajorityOracle,
    RevealDisagreementDistinguisher,
    ViewDistinguisher,
    a_attack_experiment,
    attack_a_tilde,
    attack_b_tilde,
    b_attack_experiment,
    conditioning_gap,
    dp_violation_score,
    exact_predictor_decision,
    first_m_unselected,
    gen_rand,
    gen_view,
    make_estimator_f,
    predictor_g,
    _partial_resample_excluding,
)
from awecsim.adversaries import ExactOutputEstimator
from awecsim.channels import ChannelSample, ChannelSpec, sampler_for
from awecsim.core import (
    IndexMask,
    RandomStream,
    SignVector,
    extract,
    inner_product,
    remove_at,
)
from awecsim.stats import clopper_pearson


# -- conditioning bound ---------------------------------------------------------


def test_conditioning_gap_constant():
    assert conditioning_gap(lambda m: 1, 8, 0.25) == 0.0
    assert conditioning_gap(np.zeros(2**8), 8, 0.25) == 0.0


def test_conditioning_gap_single_bit_function():
    # F(r) = r_0 at n=8: gap 1 at index 0, zero elsewhere.
    frac = conditioning_gap(lambda m: m & 1, 8, 0.5)
    assert frac == 1 / 8


def test_conditioning_gap_bound_on_random_tables():
    rng = np.random.default_rng(42)
    n, alpha = 12, 0.5
    bound = 2 / (n * alpha**2)
    for _ in range(200):
        table = rng.integers(0, 2, size=2**n).astype(np.float64)
        assert conditioning_gap(table, n, alpha) <= bound


def test_conditioning_gap_sampled_mode_agrees():
    n, alpha = 8, 0.5
    table = np.array([(m >> 3) & 1 for m in range(2**n)], dtype=np.float64)
    exact = conditioning_gap(table, n, alpha)
    sampled = conditioning_gap(table, n, alpha, mode="sampled", stream=RandomStream(3), samples=400)
    assert exact == sampled == 1 / 8


def test_conditioning_gap_capacity_and_mode_errors():
    with pytest.raises(CapacityError):
        conditioning_gap(lambda m: 0, 21, 0.5)
    with pytest.raises(ValueError):
        conditioning_gap(lambda m: 0, 8, 0.5, mode="nope")
    with pytest.raises(ValueError):
        conditioning_gap(lambda m: 0, 8, 0.5, mode="sampled")  # stream missing


# -- predictor ---------------------------------------------------------------------


def test_predictor_params():
    p = PredictorParams(0.2, 12)
    assert p.sample_count == math.ceil(128 * math.log(144) / 0.04)
    assert p.threshold == 0.05
    with pytest.raises(ValueError):
        PredictorParams(0.0, 12)
    with pytest.raises(ValueError):
        PredictorParams(1.0, 12)


def test_predictor_constant_oracle_abstains():
    params = PredictorParams(0.25, 16)
    z = SignVector.uniform(15, RandomStream(1).substream("z"))
    got = predictor_g(params, FnMaskOracle(lambda m, r, w: 1), 4, z, None, RandomStream(2))
    assert got is None


def _exact_majority_mus(i, z_signs, n):
    """Brute-force conditional means of the revealed-majority oracle."""
    bits = ((np.arange(2**n, dtype=np.uint32)[:, None] >> np.arange(n)[None, :]) & 1).astype(
        np.int8
    )
    rowsum = bits @ z_signs.astype(np.int64)
    has_i = bits[:, i] == 1
    base = rowsum - bits[:, i] * int(z_signs[i])
    mu_plus = float((base[has_i] + 1 >= 0).mean())
    mu_minus = float((base[has_i] - 1 >= 0).mean())
    mu_star = float((base[~has_i] >= 0).mean())
    return mu_plus, mu_minus, mu_star


def test_predictor_matches_exact_decision_rule_majority_n12():
    # Sampled estimates reproduce the exact-mean decision on >= 95% of
    # (i, z) pairs at gamma = 0.2.
    n, gamma, pairs = 12, 0.2, 300
    params = PredictorParams(gamma, n)
    rng = np.random.default_rng(2)
    stream = RandomStream(101)
    match = 0
    for t in range(pairs):
        z = (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int64)
        i = int(rng.integers(0, n))
        expected = exact_predictor_decision(*_exact_majority_mus(i, z, n), gamma)
        got = predictor_g(
            params,
            RevealedMajorityOracle(),
            i,
            SignVector.from_signs(np.delete(z, i)),
            None,
            stream.substream(t),
        )
        match += got == expected
    assert match / pairs >= 0.95


def test_predictor_wrong_rate_bound_majority_n12():
    # Wrong-guess rate over random (Z, I) stays under 512/(n gamma^2) + 1/(2n).
    n, gamma, trials = 12, 0.2, 400
    params = PredictorParams(gamma, n)
    stream = RandomStream(102)
    wrong = 0
    for t in range(trials):
        sub = stream.substream(t)
        z = SignVector.uniform(n, sub.substream("z"))
        i = sub.substream("i").integer(0, n - 1)
        got = predictor_g(
            params, RevealedMajorityOracle(), i, remove_at(z, i), None, sub.substream("g")
        )
        wrong += got == -z[i]
    assert wrong / trials <= 512 / (n * gamma**2) + 1 / (2 * n)


def test_exact_agreement_premise_advantage_brute_force_n12():
    # Single-flip advantage of the agreement oracle is exactly 1/2:
    # enumeration over all masks at n=12.
    n = 12
    bits = ((np.arange(2**n, dtype=np.uint32)[:, None] >> np.arange(n)[None, :]) & 1).astype(
        np.int8
    )
    rng = np.random.default_rng(7)
    for _ in range(5):
        z = (rng.integers(0, 2, size=n) * 2 - 1).astype(np.int8)
        i = int(rng.integers(0, n))
        plain = 1.0  # z matches its own copy under every mask
        flipped = float((bits[:, i] == 0).mean())
        assert plain - flipped == 0.5


def test_predictor_correct_rate_at_nonvacuous_point():
    # n * gamma^3 = 2500 > 2048: the correct-rate floor
    # gamma/4 - 512/(n gamma^2) = 0.0226 is positive and must be met.
    n, gamma, trials = 20_000, 0.5, 120
    params = PredictorParams(gamma, n)
    floor = gamma / 4 - 512 / (n * gamma**2)
    assert floor > 0
    stream = RandomStream(55)
    correct = wrong = 0
    for t in range(trials):
        sub = stream.substream(t)
        z = SignVector.uniform(n, sub.substream("z"))
        i = sub.substream("i").integer(0, n - 1)
        got = predictor_g(
            params, ExactAgreementOracle(z), i, remove_at(z, i), None, sub.substream("g")
        )
        correct += got == z[i]
        wrong += got == -z[i]
    assert correct / trials >= floor
    assert wrong / trials <= 512 / (n * gamma**2) + 1 / (2 * n)


class _RecordingOracle(MaskOracle):
    def __init__(self, inner):
        super().__init__()
        self.inner = inner
        self.calls = []

    def query(self, mask, revealed, w):
        self.calls.append((mask, revealed))
        return self.inner.query(mask, revealed, w)


def test_predictor_never_reveals_target_during_reference_phase():
    # Masks avoiding i are used exactly s times, and on those calls the
    # revealed signs are identical for both candidate completions, so the
    # reference estimate cannot depend on the hidden sign.
    n, gamma = 10, 0.3
    params = PredictorParams(gamma, n)
    z_minus = SignVector.uniform(n - 1, RandomStream(8).substream("z"))
    i = 4
    oracle = _RecordingOracle(RevealedMajorityOracle())
    predictor_g(params, oracle, i, z_minus, None, RandomStream(9))
    s = params.sample_count
    with_i = [c for c in oracle.calls if c[0][i] == 1]
    without_i = [c for c in oracle.calls if c[0][i] == 0]
    assert len(with_i) == 2 * s
    assert len(without_i) == s
    from awecsim.core import insert_sign

    z_plus_full = insert_sign(z_minus, i, 1)
    z_minus_full = insert_sign(z_minus, i, -1)
    for mask, revealed in without_i[:50]:
        assert extract(z_plus_full, mask) == revealed == extract(z_minus_full, mask)


def test_query_budget_enforced():
    oracle = FnMaskOracle(lambda m, r, w: 0, query_budget=10)
    params = PredictorParams(0.5, 8)
    with pytest.raises(QueryBudgetExceeded):
        predictor_g(
            params, oracle, 2, SignVector.uniform(7, RandomStream(1)), None, RandomStream(2)
        )


# -- A-side reduction ----------------------------------------------------------------


def test_partial_resample_identity_when_no_positions():
    y = SignVector.uniform(15, RandomStream(3).substream("y"))
    out = _partial_resample_excluding(y, 4, np.array([], dtype=np.int64), RandomStream(4))
    assert out == y
    # positions equal to the excluded index are ignored
    out2 = _partial_resample_excluding(y, 4, np.array([4, 4, 4]), RandomStream(5))
    assert out2 == y


def test_partial_resample_touches_only_given_positions():
    n, i = 40, 7
    y_minus = SignVector.uniform(n - 1, RandomStream(6).substream("y"))
    positions = np.array([2, 11, 30])
    out = _partial_resample_excluding(y_minus, i, positions, RandomStream(7).substream("f"))
    reduced = {p if p < i else p - 1 for p in positions.tolist()}
    for j in range(n - 1):
        if j not in reduced:
            assert out[j] == y_minus[j]


def test_attack_a_constant_distinguisher_abstains():
    class Constant(ViewDistinguisher):
        def evaluate(self, w, mask, revealed, stream=None):
            return 1

    stream = RandomStream(11)
    y = SignVector.uniform(30, stream.substream("y"))
    x = SignVector.uniform(30, stream.substream("x"))
    got = attack_a_tilde(
        Constant(), 5, 30, 3, remove_at(y, 3), x, {}, stream.substream("run"), gamma=0.3
    )
    assert got is None


def test_attack_a_default_gamma_is_reduction_value():
    # Paper-faithful default: gamma = 1/(2000 k). Probe via the derived
    # sample count without running the astronomically large estimation.
    params = PredictorParams(1.0 / (2000 * 8), 100)
    assert params.sample_count > 10**9


def test_a_attack_violates_privacy_with_leaky_distinguisher():
    # The disagreement detector with a hardwired copy of y converts into
    # coordinate predictions that break the privacy inequality.
    n, k, trials = 100, 27, 10_000
    sampler = sampler_for(ChannelSpec("trusted-laplace", n, 1.0))
    verdict = a_attack_experiment(
        sampler, n, k, trials, RandomStream(21), eps=1.0, delta=0.01, gamma=0.4
    )
    assert verdict.violation
    assert verdict.misses <= 3
    assert verdict.hits > 0.2 * trials


# -- shared randomness and view generation ----------------------------------------------


def test_first_m_unselected_rules():
    r = IndexMask.from_bits([1, 0, 0, 1, 0])
    assert first_m_unselected(r, [3, 2, 2, 4, 1], 3) == (2, 4, 1)
    assert first_m_unselected(r, [0, 3], 1) == ()  # both selected by the mask
    assert first_m_unselected(IndexMask.ones(4), [0, 1, 2, 3], 1) == ()
    assert first_m_unselected(r, [2, 2, 2], 2) == ()  # duplicates collapse


def test_gen_rand_draw_shape():
    stream = RandomStream(31)
    for t in range(200):
        d = gen_rand(20, 8, 16, stream.substream(t))
        assert d.m == 2
        assert len(d.h) in (0, 2)
        assert len(d.psi) == 2
        zero_set = set(d.r.complement().selected_positions().tolist())
        assert set(d.h) <= zero_set & set(d.indices)
        assert set(d.h_bar) == zero_set - set(d.h)
        assert d.y_tilde_hbar.n == len(d.h_bar)
        # h preserves draw order of the first qualifying distinct indices
        assert d.h == first_m_unselected(d.r, d.indices, d.m)


def test_gen_rand_nonempty_subset_rate():
    # P[H nonempty] >= 1 - 1/10000 at n=1e4, k=400.
    stream = RandomStream(32)
    empties = sum(
        1 for t in range(10_000) if not gen_rand(10_000, 400, 8, stream.substream(t)).h
    )
    assert empties <= 1


def test_gen_view_fields_and_partition():
    sampler = sampler_for(ChannelSpec("trusted-laplace", 24, 1.0))
    stream = RandomStream(33)
    for t in range(100):
        z, t_info = gen_view(sampler, 24, 8, stream.substream(t))
        m = math.ceil(8 / 4)
        assert z.n == m and len(t_info.h) == m
        # secret side channel carries the generating sample's x
        assert t_info.secret_x is not None
        x = t_info.secret_x
        for pos_idx, pos in enumerate(t_info.h):
            assert z[pos_idx] == x[pos]
            assert t_info.x_except_h[pos] == 0
        for j in range(24):
            if j not in t_info.h:
                assert t_info.x_except_h[j] == x[j]
        # y_tilde agrees with y off h and h_bar
        zero_set = set(t_info.r.complement().selected_positions().tolist())
        for j in range(24):
            if j in t_info.h:
                assert t_info.y_tilde_except_h[j] == 0
            elif j not in zero_set:
                assert t_info.y_tilde_except_h[j] == t_info.y[j]


def test_gen_view_uniform_subset_on_null_channel():
    # With a channel whose views are empty, the protected signs are uniform.
    def null_sampler(stream):
        rng = stream.substream("sample")
        x = rng.sign_vector(16)
        y = rng.sign_vector(16)
        return ChannelSample(x, {}, y, {}, 0)

    stream = RandomStream(34)
    counts = np.zeros(16, dtype=int)
    trials = 10_000
    for t in range(trials):
        z, _ = gen_view(null_sampler, 16, 16, stream.substream(t))
        value = sum((1 << j) for j in range(4) if z[j] == -1)
        counts[value] += 1
    expected = trials / 16
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 37  # 15 dof, far tail


def test_gen_view_retry_exhaustion():
    def tiny_sampler(stream):
        rng = stream.substream("sample")
        return ChannelSample(rng.sign_vector(1), {}, rng.sign_vector(1), {}, 0)

    raised = False
    for seed in range(50):
        try:
            gen_view(tiny_sampler, 1, 4, RandomStream(seed), max_retries=0)
        except GenViewError:
            raised = True
            break
    assert raised


# -- B-side reduction -------------------------------------------------------------------


def _accept_all(j, z, t, stream):
    return 1


def test_attack_b_abstains_outside_subset_at_expected_rate():
    # With an always-accepting distinguisher the answer rate is exactly
    # P[i in H] = (m/n) P[H nonempty].
    n, k, trials = 100, 40, 4000
    m = math.ceil(k / 4)
    sampler = sampler_for(ChannelSpec("trusted-laplace", n, 1.0))
    stream = RandomStream(41)
    answered = 0
    for t in range(trials):
        sub = stream.substream(t)
        sample = sampler(sub.substream("ch"))
        i = sub.substream("i").integer(0, n - 1)
        got = attack_b_tilde(
            ExactOutputEstimator(),
            _accept_all,
            k,
            n,
            i,
            remove_at(sample.x, i),
            sample.y,
            sample.v,
            sub.substream("atk"),
            true_x=sample.x,
        )
        answered += got is not None
    lo, hi = clopper_pearson(answered, trials)
    assert lo <= m / n <= hi


def test_attack_b_rejecting_dist_never_answers():
    n, k = 60, 20
    sampler = sampler_for(ChannelSpec("trusted-laplace", n, 1.0))
    stream = RandomStream(42)
    for t in range(300):
        sub = stream.substream(t)
        sample = sampler(sub.substream("ch"))
        i = sub.substream("i").integer(0, n - 1)
        got = attack_b_tilde(
            ExactOutputEstimator(),
            lambda j, z, tt, s: 0,
            k,
            n,
            i,
            remove_at(sample.x, i),
            sample.y,
            sample.v,
            sub.substream("atk"),
            true_x=sample.x,
        )
        assert got is None


def test_estimator_f_equals_protected_inner_product_for_exact_estimator():
    # The corrected exact estimator reduces to <z, s> identically.
    sampler = sampler_for(ChannelSpec("trusted-laplace", 32, 1.0))
    stream = RandomStream(43)
    f = make_estimator_f(ExactOutputEstimator())
    for t in range(50):
        sub = stream.substream(t)
        z, t_info = gen_view(sampler, 32, 12, sub.substream("gv"))
        s = SignVector.uniform(z.n, sub.substream("s"))
        assert f(s, t_info) == inner_product(z, s)


def test_reference_dist_with_exact_estimator():
    sampler = sampler_for(ChannelSpec("trusted-laplace", 32, 1.0))
    stream = RandomStream(44)
    gv = lambda s: gen_view(sampler, 32, 12, s)
    f = make_estimator_f(ExactOutputEstimator())
    dist = ReferenceDist(gv, f, radius=1, stream=stream.substream("cal"),
                         n_queries=96, calibration_draws=8)
    assert dist.matched_rate == 1.0
    assert dist.mismatched_rate == 0.0  # flip shifts residual by exactly 2
    z, t_info = gv(stream.substream("q"))
    assert dist(0, z, t_info, stream.substream("d1")) == 1
    flipped = SignVector.from_signs([-v if i == 1 else v for i, v in enumerate(z.signs())])
    assert dist(1, flipped, t_info, stream.substream("d2")) == 0


def test_reference_dist_rejects_uninformative_f():
    # Uniform-noise f accepts a ~(2a+1)/(2 span+1) fraction and falls well
    # under a threshold calibrated for a working estimator.
    sampler = sampler_for(ChannelSpec("trusted-laplace", 32, 1.0))
    stream = RandomStream(45)
    gv = lambda s: gen_view(sampler, 32, 12, s)
    span = 30
    rng = np.random.default_rng(9)

    def noise_f(s, t):
        return int(rng.integers(-span, span, endpoint=True))

    dist = ReferenceDist(gv, noise_f, radius=1, stream=stream.substream("cal"),
                         n_queries=512, threshold=0.5)
    z, t_info = gv(stream.substream("q"))
    frac = dist.acceptance_fraction(z, t_info, stream.substream("a"))
    expected = (2 * 1 + 1) / (2 * span + 1)
    assert abs(frac - expected) < 0.05
    assert dist(0, z, t_info, stream.substream("d")) == 0


def test_reference_dist_detects_flip_under_small_noise():
    # f = <z,s> + uniform noise in [-2, 2], radius 2: acceptance drops when
    # the candidate has one flipped coordinate.
    sampler = sampler_for(ChannelSpec("trusted-laplace", 32, 1.0))
    stream = RandomStream(46)
    gv = lambda s: gen_view(sampler, 32, 12, s)
    rng = np.random.default_rng(10)
    exact_f = make_estimator_f(ExactOutputEstimator())

    def noisy_f(s, t):
        return exact_f(s, t) + int(rng.integers(-2, 2, endpoint=True))

    dist = ReferenceDist(gv, noisy_f, radius=2, stream=stream.substream("cal"),
                         n_queries=512, calibration_draws=12)
    assert dist.matched_rate > 0.95
    assert dist.matched_rate - dist.mismatched_rate > 0.3


def test_b_attack_violates_privacy_with_exact_estimator():
    # Output-revealing estimator at n=200: aggregate hit rate clears
    # e^eps * miss + delta with interval-conclusive evidence.
    n, k, trials = 200, 60, 10_000
    sampler = sampler_for(ChannelSpec("trusted-laplace", n, 1.0))
    verdict = b_attack_experiment(
        sampler,
        ExactOutputEstimator(),
        n,
        k,
        trials,
        RandomStream(47),
        eps=1.0,
        delta=0.01,
        dist_radius=1,
        n_queries=128,
        calibration_draws=8,
    )
    assert verdict.violation
    assert verdict.misses == 0
    assert verdict.hits > 0.02 * trials


# -- violation scoring ---------------------------------------------------------------


def test_dp_violation_score_all_abstain():
    v = dp_violation_score([(0, None, 1)] * 50, 1.0, 0.0)
    assert v.hits == v.misses == 0
    assert not v.violation


def test_dp_violation_score_oracle_guesser():
    # Point estimates: hit rate 1 beats e^eps * 0 + delta for eps <= 5,
    # delta <= 0.9; the interval verdict needs enough mass on the miss side.
    guesses = [(i, 1, 1) for i in range(100)]
    v = dp_violation_score(guesses, 5.0, 0.9)
    assert v.hit_rate == 1.0 and v.miss_rate == 0.0
    assert v.hit_rate > math.exp(5.0) * v.miss_rate + 0.9
    big = dp_violation_score([(i, 1, 1) for i in range(20_000)], 5.0, 0.9)
    assert big.violation
    for eps in (0.5, 1.0, 3.0, 5.0):
        assert dp_violation_score([(i, 1, 1) for i in range(20_000)], eps, 0.9).violation


def test_dp_violation_score_matches_analytic_inequality():
    # Guesser correct with probability (1+tanh eps)/2: the verdict agrees
    # with the closed-form comparison on both sides of the boundary.
    eps = 0.8
    t = math.tanh(eps)
    rng = np.random.default_rng(12)
    guesses = []
    for i in range(20_000):
        truth = 1 if rng.integers(0, 2) else -1
        guess = truth if rng.random() < (1 + t) / 2 else -truth
        guesses.append((i, guess, truth))
    hit, miss = (1 + t) / 2, (1 - t) / 2
    delta = 0.01
    assert hit > math.exp(eps) * miss + delta  # analytic: violation at eps
    assert dp_violation_score(guesses, eps, delta).violation
    assert hit < math.exp(3 * eps) * miss + delta  # analytic: none at 3*eps
    assert not dp_violation_score(guesses, 3 * eps, delta).violation


def test_dp_violation_score_empty_rejected():
    with pytest.raises(ValueError):
        dp_violation_score([], 1.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(
    hits=st.integers(0, 150),
    misses=st.integers(0, 150),
    extra=st.integers(1, 200),
)
def test_dp_violation_monotone_in_correct_guesses(hits, misses, extra):
    base = (
        [(0, 1, 1)] * hits + [(0, 1, -1)] * misses + [(0, None, 1)] * 20
    )
    before = dp_violation_score(base, 1.0, 0.05)
    after = dp_violation_score(base + [(0, 1, 1)] * extra, 1.0, 0.05)
    if before.violation:
        assert after.violation


def test_reveal_disagreement_distinguisher_paths_agree():
    stream = RandomStream(48)
    y = SignVector.uniform(64, stream.substream("y"))
    z = SignVector.uniform(64, stream.substream("z"))
    d = RevealDisagreementDistinguisher(y)
    rows = np.stack([stream.substream("m", t).bits(64) for t in range(30)])
    batch = d.revealed_batch(None, z, rows)
    for idx in range(30):
        mask = IndexMask(rows[idx].copy(), 64)
        scalar = d.evaluate(None, mask.complement(), extract(z, mask))
        assert scalar == batch[idx]
