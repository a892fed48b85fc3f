"""Monte Carlo estimation, privacy audits, and report assembly.

Every estimate is a counter reduced over per-trial substreams, so reports
regenerate byte-identically from the same seed regardless of worker thread
count. Intervals are exact Clopper-Pearson at 99% two-sided confidence;
pass/fail comparisons add the interval half-width to the target as the
declared statistical slack. Secrecy estimates are per-adversary and are
lower bounds on the universally quantified parameters.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import adversaries as registry
from .awec import AwecParams, awec_runner
from .channels import ChannelSpec, sample_dlap, sampler_for
from .core import IndexMask, RandomStream, SignVector, inner_product, masked_inner_product
from .stats import DEFAULT_CONFIDENCE, chi2_two_sample, clopper_pearson
from .wec import ot_feasible, run_wec


class ConfigurationError(ValueError):
    """Experiment configuration rejected before any trials run."""


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with exact two-sided 99% Clopper-Pearson bounds."""

    name: str
    point: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int

    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def bernoulli_report(name: str, successes: int, trials: int, seed: int) -> EstimateReport:
    low, high = clopper_pearson(successes, trials, DEFAULT_CONFIDENCE)
    return EstimateReport(name, successes / trials, low, high, trials, seed)


def difference_report(name: str, a: EstimateReport, b: EstimateReport, seed: int) -> EstimateReport:
    """Conservative interval for |p_a - p_b| from the per-side intervals."""
    point = abs(a.point - b.point)
    low = max(0.0, a.ci_low - b.ci_high, b.ci_low - a.ci_high)
    high = max(a.ci_high - b.ci_low, b.ci_high - a.ci_low, 0.0)
    return EstimateReport(name, point, low, min(1.0, high), min(a.trials, b.trials), seed)


def effective_threads(threads: int, adversaries) -> int:
    """Trials parallelize only when every adversary declares reentrancy."""
    if any(not getattr(a, "reentrant", True) for a in adversaries):
        return 1
    return threads


def run_trials(trial_fn: Callable, trials: int, stream: RandomStream, threads: int = 1) -> list:
    """trial_fn(substream, index) evaluated for every trial index.

    Each trial draws from its own (seed, trial-index) substream and results
    are reduced in index order, so the output is independent of scheduling.
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")

    def one(t):
        return trial_fn(stream.substream("trial", t), t)

    if threads <= 1:
        return [one(t) for t in range(trials)]
    chunk = max(64, trials // (8 * threads) + 1)
    ranges = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda pair: [one(t) for t in range(pair[0], pair[1])], ranges)
        out = []
        for part in parts:
            out.extend(part)
    return out


# -- channel accuracy ----------------------------------------------------------


def estimate_accuracy(
    sampler, ell: int, trials: int, stream: RandomStream, threads: int = 1
) -> EstimateReport:
    """Empirical P[|out(v) - <x,y>| <= ell] with its confidence interval."""
    if trials < 100:
        raise ConfigurationError("accuracy estimation needs at least 100 trials")

    def trial(sub, _t):
        s = sampler(sub)
        if s.out_v is None:
            raise ConfigurationError("channel has no designated output")
        return 1 if abs(s.out_v - inner_product(s.x, s.y)) <= ell else 0

    hits = sum(run_trials(trial, trials, stream.substream("accuracy"), threads))
    return bernoulli_report("accuracy", hits, trials, stream.seed)


# -- erasure-channel certification ----------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Measured erasure/accuracy/secrecy bundle with a verdict against targets.

    verdict is pass iff the erasure interval contains one half and every
    accuracy/secrecy upper bound is at most its target plus that
    estimate's half-width. Secrecy entries are per-adversary lower bounds.
    """

    kind: str
    ell: int
    erasure: EstimateReport
    alpha: EstimateReport
    p: dict
    q: dict
    targets: dict
    verdict: bool
    checks: dict

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ell": self.ell,
            "erasure": self.erasure.as_dict(),
            "alpha": self.alpha.as_dict(),
            "p": {k: v.as_dict() for k, v in self.p.items()},
            "q": {k: v.as_dict() for k, v in self.q.items()},
            "targets": self.targets,
            "verdict": self.verdict,
            "checks": self.checks,
        }


AWEC_TARGETS = {"alpha": 0.001, "p": 0.001, "q": 0.001}
WEC_TARGETS = {"alpha": 0.002, "p": 0.001, "q": 0.522}


def _certify(kind, ell, erasure, alpha, p, q, targets, q_is_guess_rate, seed):
    checks = {
        "erasure_contains_half": erasure.ci_low <= 0.5 <= erasure.ci_high,
        "alpha_within": alpha.ci_high <= targets["alpha"] + alpha.half_width(),
    }
    for name, rep in p.items():
        checks[f"p[{name}]_within"] = rep.ci_high <= targets["p"] + rep.half_width()
    for name, rep in q.items():
        bound = (1 + targets["q"]) / 2 if q_is_guess_rate else targets["q"]
        checks[f"q[{name}]_within"] = rep.ci_high <= bound + rep.half_width()
    return Certificate(
        kind, ell, erasure, alpha, p, q, dict(targets), all(checks.values()), checks
    )


def estimate_awec(
    runner: Callable,
    ell: int,
    trials: int,
    stream: RandomStream,
    distinguishers: Sequence = (),
    estimators: Sequence = (),
    threads: int = 1,
    targets: dict = AWEC_TARGETS,
) -> Certificate:
    """Certify one erasure-channel construction by Monte Carlo.

    Measures the erasure rate, the conditional disagreement
    P[|o_a - o_b| > ell | not erased], the per-distinguisher branch
    advantage on A views, and the per-estimator probability of landing
    within 1000*ell of A's output under erasure.
    """
    if not distinguishers or not estimators:
        raise ConfigurationError("need at least one distinguisher and one estimator")

    def trial(sub, _t):
        outcome = runner(sub.substream("run"))
        erased = outcome.erased
        exceed = None if erased else int(abs(outcome.o_a - outcome.o_b) > ell)
        d_bits = tuple(
            d.evaluate(outcome.v_a, sub.substream("dist", d.name)) for d in distinguishers
        )
        e_within = None
        if erased:
            e_within = []
            for e in estimators:
                view = outcome.v_b
                if getattr(e, "needs_secret", False):
                    view = dataclasses.replace(view, secret_x=outcome.v_a.x)
                est = e.evaluate(view, sub.substream("est", e.name))
                e_within.append(int(abs(est - outcome.o_a) <= 1000 * ell))
            e_within = tuple(e_within)
        return erased, exceed, d_bits, e_within

    rows = run_trials(
        trial,
        trials,
        stream.substream("awec-cert"),
        effective_threads(threads, list(distinguishers) + list(estimators)),
    )
    n_er = sum(1 for r in rows if r[0])
    n_no = trials - n_er
    if n_er == 0 or n_no == 0:
        raise ConfigurationError("a conditioning branch received zero trials")
    erasure = bernoulli_report("erasure", n_er, trials, stream.seed)
    alpha = bernoulli_report(
        "alpha", sum(r[1] for r in rows if not r[0]), n_no, stream.seed
    )
    p = {}
    for di, d in enumerate(distinguishers):
        acc_no = sum(r[2][di] for r in rows if not r[0])
        acc_er = sum(r[2][di] for r in rows if r[0])
        rep_no = bernoulli_report(f"p[{d.name}]|live", acc_no, n_no, stream.seed)
        rep_er = bernoulli_report(f"p[{d.name}]|erased", acc_er, n_er, stream.seed)
        p[d.name] = difference_report(f"p[{d.name}]", rep_no, rep_er, stream.seed)
    q = {}
    for ei, e in enumerate(estimators):
        within = sum(r[3][ei] for r in rows if r[0])
        q[e.name] = bernoulli_report(f"q[{e.name}]", within, n_er, stream.seed)
    return _certify("awec", ell, erasure, alpha, p, q, targets, False, stream.seed)


def estimate_wec(
    wec_runner: Callable,
    ell: int,
    trials: int,
    stream: RandomStream,
    distinguishers: Sequence = (),
    guessers: Sequence = (),
    threads: int = 1,
    targets: dict = WEC_TARGETS,
) -> Certificate:
    """Certify the bit channel; q entries are conditional guess rates.

    The guess-rate target is (1 + q)/2 for the q in targets. Feasibility
    consumers should convert a guess-rate upper bound g to the secrecy
    parameter via max(0, 2g - 1).
    """
    if not distinguishers or not guessers:
        raise ConfigurationError("need at least one distinguisher and one guesser")

    def trial(sub, _t):
        outcome = wec_runner(sub.substream("run"))
        erased = outcome.erased
        disagree = None if erased else int(outcome.o_hat_a != outcome.o_hat_b)
        d_bits = tuple(
            d.evaluate(outcome.v_hat_a.awec_view, sub.substream("dist", d.name))
            for d in distinguishers
        )
        g_hits = None
        if erased:
            g_hits = tuple(
                int(
                    g.evaluate(
                        outcome.v_hat_b, outcome.bucket_params, sub.substream("guess", g.name)
                    )
                    == outcome.o_hat_a
                )
                for g in guessers
            )
        return erased, disagree, d_bits, g_hits

    rows = run_trials(
        trial,
        trials,
        stream.substream("wec-cert"),
        effective_threads(threads, list(distinguishers) + list(guessers)),
    )
    n_er = sum(1 for r in rows if r[0])
    n_no = trials - n_er
    if n_er == 0 or n_no == 0:
        raise ConfigurationError("a conditioning branch received zero trials")
    erasure = bernoulli_report("erasure", n_er, trials, stream.seed)
    alpha = bernoulli_report(
        "alpha", sum(r[1] for r in rows if not r[0]), n_no, stream.seed
    )
    p = {}
    for di, d in enumerate(distinguishers):
        acc_no = sum(r[2][di] for r in rows if not r[0])
        acc_er = sum(r[2][di] for r in rows if r[0])
        rep_no = bernoulli_report(f"p[{d.name}]|live", acc_no, n_no, stream.seed)
        rep_er = bernoulli_report(f"p[{d.name}]|erased", acc_er, n_er, stream.seed)
        p[d.name] = difference_report(f"p[{d.name}]", rep_no, rep_er, stream.seed)
    q = {}
    for gi, g in enumerate(guessers):
        hits = sum(r[3][gi] for r in rows if r[0])
        q[g.name] = bernoulli_report(f"q[{g.name}]", hits, n_er, stream.seed)
    return _certify("wec", ell, erasure, alpha, p, q, targets, True, stream.seed)


# -- privacy audit ---------------------------------------------------------------


@dataclass(frozen=True)
class AuditVerdict:
    adversary: str
    side: str
    coordinate: int
    left: EstimateReport
    right: EstimateReport
    eps: float
    delta: float
    violation: bool

    def as_dict(self) -> dict:
        return {
            "adversary": self.adversary,
            "side": self.side,
            "coordinate": self.coordinate,
            "left": self.left.as_dict(),
            "right": self.right.as_dict(),
            "eps": self.eps,
            "delta": self.delta,
            "violation": self.violation,
        }


def dp_audit(
    sampler,
    adversary,
    side: str,
    pair,
    eps: float,
    delta: float,
    trials: int,
    stream: RandomStream,
    threads: int = 1,
) -> AuditVerdict:
    """Estimate the privacy inequality on one neighboring pair.

    side "y" pins B's input and shows the adversary A's observation
    (x, u); side "x" pins A's input and shows (y, v). Violation requires
    interval-conclusive evidence in either direction: some acceptance lower
    bound exceeding e^eps times the other side's upper bound plus delta.
    """
    left_vec, right_vec = pair
    if left_vec.n != right_vec.n:
        raise ConfigurationError("neighboring pair lengths differ")
    diff = [i for i in range(left_vec.n) if left_vec[i] != right_vec[i]]
    if len(diff) != 1:
        raise ConfigurationError("pair must differ in exactly one coordinate")
    if side not in ("x", "y"):
        raise ConfigurationError("side must be 'x' or 'y'")

    def accept_count(vec, label):
        def trial(sub, _t):
            if side == "y":
                s = sampler(sub.substream("draw"), y=vec)
                obs = {"own": s.x, "view": s.u}
            else:
                s = sampler(sub.substream("draw"), x=vec)
                obs = {"own": s.y, "view": s.v}
            return adversary.evaluate(obs, sub.substream("adv"))

        return sum(
            run_trials(
                trial,
                trials,
                stream.substream("audit", label),
                effective_threads(threads, [adversary]),
            )
        )

    k_left = accept_count(left_vec, "left")
    k_right = accept_count(right_vec, "right")
    left = bernoulli_report("accept|left", k_left, trials, stream.seed)
    right = bernoulli_report("accept|right", k_right, trials, stream.seed)
    bound = math.exp(eps)
    violation = (left.ci_low > bound * right.ci_high + delta) or (
        right.ci_low > bound * left.ci_high + delta
    )
    return AuditVerdict(
        getattr(adversary, "name", "adversary"), side, diff[0], left, right, eps, delta, violation
    )


def neighboring_pair(n: int, coordinate: int, stream: RandomStream):
    """A uniform vector and its single-coordinate flip."""
    base = SignVector.uniform(n, stream.substream("pair"))
    from .core import flip_at

    return base, flip_at(base, coordinate)


@dataclass(frozen=True)
class ExactAuditVerdict:
    side: str
    coordinate: int
    max_ratio: float
    eps: float
    violation: bool

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if math.isinf(self.max_ratio):
            out["max_ratio"] = "infinity"  # keep the tree strict-JSON
        return out


def exact_dp_audit(spec: ChannelSpec, side: str, coordinate: int) -> ExactAuditVerdict:
    """Enumerated worst-case likelihood ratio instead of sampling.

    Supported for the additive-noise kinds, where a single-coordinate flip
    shifts the noised sum by two. A leaked coordinate makes the flipped
    position perfectly distinguishable from A's side, reported as an
    infinite ratio.
    """
    from .channels import max_ratio_additive_noise

    if spec.kind not in ("trusted-laplace", "split-noise", "leaky"):
        raise ConfigurationError(f"exact audit unsupported for {spec.kind!r}")
    if not 0 <= coordinate < spec.n:
        raise ConfigurationError("coordinate out of range")
    if spec.kind == "leaky" and side == "y" and coordinate == int(spec.extra["leak_index"]):
        ratio = math.inf
    else:
        ratio = max_ratio_additive_noise(spec)
    violation = ratio > math.exp(spec.eps) * (1 + 1e-9) + spec.delta
    return ExactAuditVerdict(side, coordinate, ratio, spec.eps, violation)


# -- trial logs --------------------------------------------------------------------


def write_awec_trial_log(runner: Callable, trials: int, stream: RandomStream, path: str):
    """One CSV record per run: branch bit, both outputs, absolute gap."""
    outcomes = run_trials(lambda sub, _t: runner(sub.substream("run")), trials,
                          stream.substream("log"), 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("trial,erased,o_a,o_b,abs_gap\n")
        for t, oc in enumerate(outcomes):
            if oc.erased:
                fh.write(f"{t},1,{oc.o_a},,\n")
            else:
                fh.write(f"{t},0,{oc.o_a},{oc.o_b},{abs(oc.o_a - oc.o_b)}\n")


def write_wec_trial_log(wec_runner: Callable, trials: int, stream: RandomStream, path: str):
    """AWEC log columns extended with the offset, parity mask, and bits."""
    outcomes = run_trials(lambda sub, _t: wec_runner(sub.substream("run")), trials,
                          stream.substream("log"), 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("trial,erased,s,r_gl,o_hat_a,o_hat_b\n")
        for t, oc in enumerate(outcomes):
            b = "" if oc.o_hat_b is None else oc.o_hat_b
            fh.write(f"{t},{int(oc.erased)},{oc.v_hat_a.s},{oc.v_hat_a.r_gl},{oc.o_hat_a},{b}\n")


# -- joint-view equivalence experiment --------------------------------------------


def _mix16(values) -> int:
    h = 0x9E3779B97F4A7C15
    for v in values:
        h ^= (int(v) & 0xFFFFFFFFFFFFFFFF) * 0xBF58476D1CE4E5B9 % (1 << 64)
        h = (h * 0x94D049BB133111EB) % (1 << 64)
        h ^= h >> 29
    return h & 0xFFFF


def _clip(v: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, int(v)))


def _feature_bucket(x, y, r, z, e_a, e_b) -> int:
    ip = inner_product(x, y)
    residual = z - ip - e_a - e_b
    return _mix16(
        (
            _clip(residual, -8, 8),
            _clip(e_a, -8, 8),
            _clip(e_b, -8, 8),
            _clip(z, -16, 16),
            _clip(ip, -16, 16),
            r.count(),
        )
    )


def _masked_exchange_trial(n, eps, sub):
    """One run of the channel-aided exchange: reveal on a mask, both noise
    shares visible to their owners."""
    x = SignVector.uniform(n, sub.substream("x"))
    y = SignVector.uniform(n, sub.substream("y"))
    r = IndexMask.uniform(n, sub.substream("r"))
    scale = 2.0 / eps
    e_a = sample_dlap(scale, sub.substream("ea"))
    e_b = sample_dlap(scale, sub.substream("eb"))
    z = inner_product(x, y) + e_a + e_b
    return x, y, r, z, e_a, e_b


def _plain_simulation_trial(n, eps, sub, broken: bool):
    """Channel-free simulation: noised partial sums exchanged in reverse.

    The broken variant re-draws B's noise share after the total is fixed,
    severing the deterministic tie between the reported tuple entries.
    """
    x = SignVector.uniform(n, sub.substream("x"))
    y = SignVector.uniform(n, sub.substream("y"))
    r = IndexMask.uniform(n, sub.substream("r"))
    scale = 2.0 / eps
    e_a = sample_dlap(scale, sub.substream("ea"))
    e_b = sample_dlap(scale, sub.substream("eb"))
    z_a = masked_inner_product(x, y, r, selected=True) + e_a
    z_b = masked_inner_product(x, y, r, selected=False) + e_b
    z = z_a + z_b
    if broken:
        e_b = sample_dlap(scale, sub.substream("eb-late"))
    return x, y, r, z, e_a, e_b


def view_equivalence(
    n: int,
    eps: float,
    trials: int,
    stream: RandomStream,
    threads: int = 1,
    broken: bool = False,
) -> dict:
    """Compare joint-view statistics of the exchange against its simulation.

    Reports a split-sample total-variation lower bound over 16-bit hashed
    feature buckets (half the trials pick the discriminating bucket set,
    the other half score it) plus two-sample chi-square p-values for the
    scalar marginals. The feature set includes the arithmetic residual
    z - <x,y> - e_a - e_b, which is identically zero for the faithful
    simulation and spread out for the broken one.
    """
    if n > 16:
        raise ConfigurationError("histogram experiment capped at n=16")
    if trials < 4:
        raise ConfigurationError("too few trials")

    def proto_trial(sub, _t):
        return _masked_exchange_trial(n, eps, sub)

    def sim_trial(sub, _t):
        return _plain_simulation_trial(n, eps, sub, broken)

    rows_p = run_trials(proto_trial, trials, stream.substream("protocol"), threads)
    rows_s = run_trials(sim_trial, trials, stream.substream("simulator"), threads)

    buckets_p = np.array([_feature_bucket(*row) for row in rows_p])
    buckets_s = np.array([_feature_bucket(*row) for row in rows_s])
    half = trials // 2
    train_p = np.bincount(buckets_p[:half], minlength=1 << 16)
    train_s = np.bincount(buckets_s[:half], minlength=1 << 16)
    chosen = train_p > train_s
    hit_p = int(chosen[buckets_p[half:]].sum())
    hit_s = int(chosen[buckets_s[half:]].sum())
    n_eval = trials - half
    rep_p = bernoulli_report("bucket-set|protocol", hit_p, n_eval, stream.seed)
    rep_s = bernoulli_report("bucket-set|simulator", hit_s, n_eval, stream.seed)
    tv = difference_report("tv-lower-bound", rep_p, rep_s, stream.seed)

    def marginal(idx, lo, hi):
        vp = np.array([_clip(row[idx], lo, hi) - lo for row in rows_p])
        vs = np.array([_clip(row[idx], lo, hi) - lo for row in rows_s])
        bins = hi - lo + 1
        return chi2_two_sample(np.bincount(vp, minlength=bins), np.bincount(vs, minlength=bins))

    marginals = {
        "z": marginal(3, -24, 24),
        "e_a": marginal(4, -12, 12),
        "e_b": marginal(5, -12, 12),
        "mask_weight": chi2_two_sample(
            np.bincount([row[2].count() for row in rows_p], minlength=n + 1),
            np.bincount([row[2].count() for row in rows_s], minlength=n + 1),
        ),
    }
    return {
        "broken_simulator": broken,
        "tv": tv.as_dict(),
        "marginal_p_values": marginals,
        "trials": trials,
        "seed": stream.seed,
    }


# -- full pipeline -----------------------------------------------------------------


def pipeline_report(
    spec: ChannelSpec,
    params: AwecParams,
    trials: int,
    stream: RandomStream,
    distinguisher_names: Sequence[str] = registry.DEFAULT_AWEC_DISTINGUISHERS,
    estimator_names: Sequence[str] = registry.DEFAULT_AWEC_ESTIMATORS,
    guesser_names: Sequence[str] = registry.DEFAULT_WEC_GUESSERS,
    audit_names: Sequence[str] = registry.DEFAULT_AUDIT_ADVERSARIES,
    audit_trials: Optional[int] = None,
    delta: float = 0.0,
    threads: int = 1,
) -> dict:
    """Chain accuracy, erasure-channel and bit-channel certification, the
    privacy audit, and the oblivious-transfer feasibility arithmetic.

    The feasibility verdict is a pure function of the measured bit-channel
    upper confidence bounds: alpha and p upper bounds (p maximized over
    distinguishers), and the guess-rate upper bound (maximized over
    guessers) converted to a secrecy parameter by q = max(0, 2g - 1).
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    if spec.n != params.n:
        raise ConfigurationError("channel size and run parameters disagree")
    sampler = sampler_for(spec)
    dists = registry.resolve(registry.AWEC_DISTINGUISHERS, distinguisher_names)
    ests = registry.resolve(registry.AWEC_ESTIMATORS, estimator_names)
    guessers = registry.resolve(registry.WEC_GUESSERS, guesser_names)
    audits = registry.resolve(registry.AUDIT_ADVERSARIES, audit_names)

    accuracy = estimate_accuracy(
        sampler, params.ell, max(100, trials), stream.substream("accuracy"), threads
    )
    runner = awec_runner(sampler, params)
    awec_cert = estimate_awec(
        runner, params.ell, trials, stream.substream("awec"), dists, ests, threads
    )
    wec_cert = estimate_wec(
        lambda s: run_wec(runner, params.ell, params.n, s),
        params.ell,
        trials,
        stream.substream("wec"),
        dists,
        guessers,
        threads,
    )

    audit_trials = audit_trials or min(trials, 10_000)
    coord = int(spec.extra.get("leak_index", 0))
    pair = neighboring_pair(spec.n, coord, stream.substream("audit-pair"))
    audit_results = [
        dp_audit(
            sampler,
            adv,
            "y",
            pair,
            spec.eps,
            delta if delta else spec.delta,
            audit_trials,
            stream.substream("audit", adv.name),
            threads,
        )
        for adv in audits
    ]

    alpha_u = Fraction(str(min(1.0, wec_cert.alpha.ci_high)))
    p_u = Fraction(str(min(1.0, max(rep.ci_high for rep in wec_cert.p.values()))))
    guess_u = max(rep.ci_high for rep in wec_cert.q.values())
    q_u = max(Fraction(0), 2 * Fraction(str(min(1.0, guess_u))) - 1)
    feasible = ot_feasible(alpha_u, p_u, q_u)

    return {
        "channel": {
            "kind": spec.kind,
            "n": spec.n,
            "eps": spec.eps,
            "delta": spec.delta,
            "extra": {k: v for k, v in spec.extra.items() if k != "protocol"},
        },
        "params": {
            "ell": params.ell,
            "lambda1": params.lambda1,
            "lambda2": params.lambda2,
            "k": params.k,
            "regime": params.regime_diagnostics(spec.delta),
        },
        "accuracy": accuracy.as_dict(),
        "awec": awec_cert.as_dict(),
        "wec": wec_cert.as_dict(),
        "audit": {
            "results": [a.as_dict() for a in audit_results],
            "violation": any(a.violation for a in audit_results),
        },
        "feasibility": {
            "alpha_upper": float(alpha_u),
            "p_upper": float(p_u),
            "q_upper": float(q_u),
            "ot_feasible": feasible,
        },
        "trials": trials,
        "seed": stream.seed,
    }
