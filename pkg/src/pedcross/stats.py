"""Rank-based tests: Mann-Whitney U and Kruskal-Wallis H.

U uses exact permutation enumeration when both samples have at most 8
values (ties handled naturally by enumerating the observed pooled sample),
otherwise a tie-corrected normal approximation with continuity correction.
H uses the tie-corrected statistic with a chi-square tail probability; the
incomplete-gamma tail is computed in-module, so there is no dependency on
an external stats library at runtime.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

EXACT_LIMIT = 8


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    group_sizes: tuple
    statistic_name: str            # "U" or "H"
    method: str                    # "exact", "normal", or "chi2"
    correction: str = "none"       # "none" or "bonferroni(k)"


def rankdata(x) -> np.ndarray:
    """Midranks: ties share the average of the ranks they span."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by series expansion."""
    if x <= 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    k = a
    for _ in range(10000):
        k += 1.0
        term *= x / k
        total += term
        if abs(term) < abs(total) * 1e-15:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability."""
    if x <= 0.0:
        return 1.0
    a = 0.5 * df
    h = 0.5 * x
    if h < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_p(a, h)))
    return min(1.0, max(0.0, _gamma_q_cf(a, h)))


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """U of the first sample from pooled midranks."""
    na = a.size
    ranks = rankdata(np.concatenate([a, b]))
    return float(ranks[:na].sum() - na * (na + 1) / 2.0)


def mann_whitney_u(a, b, alternative: str = "two-sided") -> TestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 1 or b.size < 1:
        raise ValueError("each sample needs at least one value")
    na, nb = a.size, b.size
    u = _u_statistic(a, b)

    if na <= EXACT_LIMIT and nb <= EXACT_LIMIT:
        pooled = np.concatenate([a, b])
        n = na + nb
        us = []
        for comb in itertools.combinations(range(n), na):
            mask = np.zeros(n, dtype=bool)
            mask[list(comb)] = True
            us.append(_u_statistic(pooled[mask], pooled[~mask]))
        us = np.asarray(us)
        total = us.size
        eps = 1e-9
        p_less = float(np.sum(us <= u + eps)) / total
        p_greater = float(np.sum(us >= u - eps)) / total
        if alternative == "less":
            p = p_less
        elif alternative == "greater":
            p = p_greater
        else:
            p = min(1.0, 2.0 * min(p_less, p_greater))
        return TestResult(statistic=u, p_value=p, group_sizes=(na, nb),
                          statistic_name="U", method="exact")

    mu = na * nb / 2.0
    n = na + nb
    pooled = np.concatenate([a, b])
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts))
    var = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return TestResult(statistic=u, p_value=1.0, group_sizes=(na, nb),
                          statistic_name="U", method="normal")
    sd = math.sqrt(var)
    if alternative == "less":
        z = (u - mu + 0.5) / sd
        p = 1.0 - normal_sf(z)
    elif alternative == "greater":
        z = (u - mu - 0.5) / sd
        p = normal_sf(z)
    else:
        z = (abs(u - mu) - 0.5) / sd
        p = min(1.0, 2.0 * normal_sf(z))
    return TestResult(statistic=u, p_value=p, group_sizes=(na, nb),
                      statistic_name="U", method="normal")


def kruskal_wallis_h(groups) -> TestResult:
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    sizes = tuple(int(g.size) for g in groups)
    if any(s < 1 for s in sizes):
        raise ValueError("each group needs at least one value")
    pooled = np.concatenate(groups)
    n = pooled.size
    ranks = rankdata(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start:start + g.size]
        h += r.sum() ** 2 / g.size
        start += g.size
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts))
    denom = 1.0 - tie_term / (n ** 3 - n)
    if denom <= 0.0:
        # every value identical
        return TestResult(statistic=0.0, p_value=1.0, group_sizes=sizes,
                          statistic_name="H", method="chi2")
    h = h / denom
    h = max(0.0, h)
    p = chi2_sf(h, len(groups) - 1)
    return TestResult(statistic=float(h), p_value=float(p), group_sizes=sizes,
                      statistic_name="H", method="chi2")


def bonferroni(result: TestResult, k: int) -> TestResult:
    """Family-wise correction over k comparisons; never lowers p."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return TestResult(statistic=result.statistic,
                      p_value=min(1.0, k * result.p_value),
                      group_sizes=result.group_sizes,
                      statistic_name=result.statistic_name,
                      method=result.method,
                      correction=f"bonferroni({k})")
