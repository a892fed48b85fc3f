"""Interval and test statistics shared by the harness and the attack scorers."""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

DEFAULT_CONFIDENCE = 0.99


def clopper_pearson(k: int, n: int, confidence: float = DEFAULT_CONFIDENCE):
    """Exact two-sided binomial confidence interval for k successes in n trials."""
    if not 0 <= k <= n or n <= 0:
        raise ValueError("need 0 <= k <= n with n > 0")
    alpha = 1.0 - confidence
    low = 0.0 if k == 0 else float(sps.beta.ppf(alpha / 2.0, k, n - k + 1))
    high = 1.0 if k == n else float(sps.beta.ppf(1.0 - alpha / 2.0, k + 1, n - k))
    return low, high


def chi2_two_sample(counts_a, counts_b, min_expected: float = 5.0) -> float:
    """p-value for equality of two multinomial samples over shared bins.

    Bins with pooled expected count below min_expected are merged into a
    single residual bin before applying the chi-square statistic.
    """
    a = np.asarray(counts_a, dtype=np.float64)
    b = np.asarray(counts_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("count vectors must align")
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise ValueError("empty sample")
    pooled = (a + b) * (na / (na + nb))
    keep = pooled >= min_expected
    if (~keep).any():
        a = np.append(a[keep], a[~keep].sum())
        b = np.append(b[keep], b[~keep].sum())
    if len(a) < 2:
        return 1.0
    stat = 0.0
    for counts, total in ((a, na), (b, nb)):
        expected = (a + b) * (total / (na + nb))
        stat += ((counts - expected) ** 2 / expected).sum()
    dof = len(a) - 1
    return float(sps.chi2.sf(stat, dof))


def chi2_independence_2x2(table) -> float:
    """p-value for independence in a 2x2 contingency table."""
    t = np.asarray(table, dtype=np.float64)
    if t.shape != (2, 2):
        raise ValueError("expected a 2x2 table")
    n = t.sum()
    if n == 0 or (t.sum(axis=0) == 0).any() or (t.sum(axis=1) == 0).any():
        return 1.0
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / n
    stat = ((t - expected) ** 2 / expected).sum()
    return float(sps.chi2.sf(stat, 1))


def binom_tail_at_least(k: int, n: int, p: float) -> float:
    """P[Bin(n, p) >= k]."""
    return float(sps.binom.sf(k - 1, n, p))


def binom_tail_at_most(k: int, n: int, p: float) -> float:
    """P[Bin(n, p) <= k]."""
    return float(sps.binom.cdf(k, n, p))
