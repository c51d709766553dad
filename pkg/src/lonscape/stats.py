"""Mann-Whitney U tests with significance stars for encoding comparisons.

Two-sided throughout. Small tie-free samples (both sides at most 8) get
an exact p by enumerating rank assignments; everything else uses the
normal approximation with midrank tie correction and continuity
correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Mapping, Sequence

EXACT_LIMIT = 8

STAR_THRESHOLDS = (
    (0.00005, "****"),
    (0.0005, "***"),
    (0.005, "**"),
    (0.05, "*"),
)


class Significance(str, Enum):
    NS = "ns"
    P05 = "*"
    P005 = "**"
    P0005 = "***"
    P00005 = "****"


def stars_for_p(p: float) -> Significance:
    for threshold, stars in STAR_THRESHOLDS:
        if p < threshold:
            return Significance(stars)
    return Significance.NS


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float  # U for the first sample
    p_value: float
    stars: Significance
    method: str  # "exact" | "approx" | "degenerate"


def _midranks(pooled: Sequence[float]) -> list[float]:
    """Ranks (1-based) of the sorted pooled sample, ties sharing their mean."""
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _exact_two_sided_p(a: Sequence[float], b: Sequence[float], u_a: float) -> float:
    """Enumerate every assignment of pooled ranks to the first sample.

    Tie-free only: ranks are the integers 1..N, so the statistic of an
    assignment is its rank sum minus the minimum possible.
    """
    n_a, n_b = len(a), len(b)
    total_pairs = n_a * n_b
    u_min = min(u_a, total_pairs - u_a)
    count = 0
    total = 0
    base = n_a * (n_a + 1) // 2
    for chosen in combinations(range(1, n_a + n_b + 1), n_a):
        total += 1
        if sum(chosen) - base <= u_min:
            count += 1
    return min(1.0, 2.0 * count / total)


def _approx_two_sided_p(n_a: int, n_b: int, u_a: float, tie_sizes: list[int]) -> float:
    n = n_a + n_b
    mu = n_a * n_b / 2.0
    tie_term = sum(t**3 - t for t in tie_sizes)
    variance = (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return 1.0
    d = u_a - mu
    if d > 0:
        d -= 0.5
    elif d < 0:
        d += 0.5
    z = d / math.sqrt(variance)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> UTestResult:
    """Two-sided rank-sum test; the reported U belongs to the first sample."""
    if not a or not b:
        raise ValueError("both samples need at least one observation")
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    rank_sum_a = sum(ranks[: len(a)])
    u_a = rank_sum_a - len(a) * (len(a) + 1) / 2.0

    if len(set(pooled)) == 1:
        return UTestResult(u_a, 1.0, Significance.NS, "degenerate")

    has_ties = len(set(pooled)) != len(pooled)
    if not has_ties and len(a) <= EXACT_LIMIT and len(b) <= EXACT_LIMIT:
        p = _exact_two_sided_p(a, b, u_a)
        method = "exact"
    else:
        sizes: dict[float, int] = {}
        for v in pooled:
            sizes[v] = sizes.get(v, 0) + 1
        p = _approx_two_sided_p(len(a), len(b), u_a, [t for t in sizes.values() if t > 1])
        method = "approx"
    return UTestResult(u_a, p, stars_for_p(p), method)


@dataclass(frozen=True)
class ComparisonRow:
    first: str
    second: str
    metric: str
    u_statistic: float
    p_value: float
    stars: Significance


def compare_encodings(
    metric_samples: Mapping[str, Mapping[str, Sequence[float]]],
) -> list[ComparisonRow]:
    """Test every unordered pair of encodings on every shared metric."""
    labels = sorted(metric_samples)
    if len(labels) < 2:
        raise ValueError("need at least two encodings to compare")
    rows: list[ComparisonRow] = []
    for first, second in combinations(labels, 2):
        shared = sorted(set(metric_samples[first]) & set(metric_samples[second]))
        for metric in shared:
            sample_a = list(metric_samples[first][metric])
            sample_b = list(metric_samples[second][metric])
            if not sample_a or not sample_b:
                continue
            result = mann_whitney_u(sample_a, sample_b)
            rows.append(
                ComparisonRow(
                    first=first,
                    second=second,
                    metric=metric,
                    u_statistic=result.u_statistic,
                    p_value=result.p_value,
                    stars=result.stars,
                )
            )
    return rows
