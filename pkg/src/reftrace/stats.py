"""Descriptive statistics, Kruskal-Wallis H and Mann-Whitney U on mid-ranks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from scipy.stats import chi2

EXACT_LIMIT = 400  # n*m at or below this uses the exact permutation distribution


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    tie_corrected: bool

    __test__ = False  # not a pytest class


def descriptive_stats(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation (n-1 denominator, 0 for a single value)."""
    n = len(values)
    if n == 0:
        raise ValueError("descriptive statistics need at least one value")
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def midranks(values: Sequence[float]) -> List[float]:
    """1-based ranks with ties sharing the average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_sum(values: Sequence[float]) -> int:
    counts: Dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return sum(t ** 3 - t for t in counts.values())


def kruskal_wallis(groups: Mapping[str, Sequence[float]]) -> TestResult:
    labels = list(groups)
    if len(labels) < 2:
        raise ValueError("Kruskal-Wallis needs at least two groups")
    if any(len(groups[g]) == 0 for g in labels):
        raise ValueError("every group needs at least one value")
    pooled = [v for g in labels for v in groups[g]]
    n = len(pooled)
    ranks = midranks(pooled)
    ties = _tie_sum(pooled)
    correction = 1 - ties / (n ** 3 - n) if n > 1 else 0.0
    if correction <= 0:
        return TestResult(0.0, 1.0, "kruskal-wallis", True)
    h = 0.0
    start = 0
    for g in labels:
        size = len(groups[g])
        r = math.fsum(ranks[start:start + size])
        h += r * r / size
        start += size
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    h = max(h, 0.0) / correction
    p = float(chi2.sf(h, len(labels) - 1))
    return TestResult(h, min(max(p, 0.0), 1.0), "kruskal-wallis", ties > 0)


def u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """#{(x, y): x > y} + 0.5 * #{ties} over x in a, y in b."""
    ranks = midranks(list(a) + list(b))
    n = len(a)
    return math.fsum(ranks[:n]) - n * (n + 1) / 2


def _exact_two_sided(a: Sequence[float], b: Sequence[float], u_obs: float) -> float:
    """Share of all C(N, n) group assignments whose U is at least as far from n*m/2 as observed."""
    pooled = list(a) + list(b)
    n, m = len(a), len(b)
    doubled = [int(round(2 * r)) for r in midranks(pooled)]  # mid-ranks are multiples of 1/2
    # counts[k][s] = number of k-subsets whose doubled rank sum is s
    counts: List[Dict[int, int]] = [dict() for _ in range(n + 1)]
    counts[0][0] = 1
    for r in doubled:
        for k in range(n, 0, -1):
            src = counts[k - 1]
            dst = counts[k]
            for s, c in src.items():
                dst[s + r] = dst.get(s + r, 0) + c
    base = n * (n + 1)  # doubled minimum rank sum
    centre = Fraction(n * m, 2)
    observed = abs(Fraction(u_obs).limit_denominator(2) - centre)
    total = extreme = 0
    for s, c in counts[n].items():
        u = Fraction(s - base, 2)
        total += c
        if abs(u - centre) >= observed:
            extreme += c
    return extreme / total


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U for group `a`.

    Exact permutation p-value when len(a)*len(b) <= 400, otherwise the
    normal approximation with tie-corrected variance and continuity correction.
    """
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n, m = len(a), len(b)
    u = u_statistic(a, b)
    pooled = list(a) + list(b)
    ties = _tie_sum(pooled)
    if n * m <= EXACT_LIMIT:
        return TestResult(u, min(1.0, _exact_two_sided(a, b, u)), "mann-whitney", ties > 0)
    total = n + m
    var = n * m / 12.0 * ((total + 1) - ties / (total * (total - 1)))
    if var <= 0:
        return TestResult(u, 1.0, "mann-whitney", True)
    z = max(abs(u - n * m / 2.0) - 0.5, 0.0) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2))
    return TestResult(u, min(max(p, 0.0), 1.0), "mann-whitney", ties > 0)


def bonferroni(p_values: Sequence[float]) -> List[float]:
    k = len(p_values)
    return [min(1.0, p * k) for p in p_values]
