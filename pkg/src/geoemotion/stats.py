"""Two-sample rank-sum testing and product-moment correlation."""

from __future__ import annotations

import itertools
import math
import sys
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .parallel import map_chunks

EXACT_MAX_TOTAL = 12
TWO_SIDED = "two-sided"
ALTERNATIVES = (TWO_SIDED, "less", "greater")
EXACT = "exact"
NORMAL = "normal-approximation"


@dataclass(frozen=True)
class RankSumResult:
    u_statistic: float
    z_value: float
    p_value: float
    method: str
    n1: int
    n2: int
    alternative: str = TWO_SIDED
    constant: bool = False  # every observation tied; p fixed at 1

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    n1: int
    n2: int
    alternative: str = TWO_SIDED

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties sharing the mean of their positions."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2))


def _exact_tail_probs(u: float, n1: int, n2: int) -> tuple[float, float]:
    """P(U <= u) and P(U >= u) by enumerating every rank subset of size n1."""
    n = n1 + n2
    offset = n1 * (n1 + 1) // 2
    le = ge = total = 0
    for subset in itertools.combinations(range(1, n + 1), n1):
        value = sum(subset) - offset
        total += 1
        if value <= u:
            le += 1
        if value >= u:
            ge += 1
    return le / total, ge / total


def rank_sum_test(x: Sequence[float], y: Sequence[float], alternative: str = TWO_SIDED) -> RankSumResult:
    """Wilcoxon rank-sum (Mann-Whitney U) test.

    ``u_statistic`` counts pairs with x above y (ties count one half).
    An exact p comes from full enumeration when the combined size is at
    most 12 and nothing is tied; otherwise the tie-corrected normal
    approximation with continuity correction is used. "greater" tests
    whether x tends to exceed y.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("rank-sum test needs two nonempty samples")
    combined = x + y
    n = n1 + n2
    ranks = midranks(combined)
    r1 = math.fsum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2
    mu = n1 * n2 / 2

    ties = Counter(combined)
    tie_term = sum(t**3 - t for t in ties.values())
    variance = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if variance <= 0:
        return RankSumResult(u, 0.0, 1.0, NORMAL, n1, n2, alternative, constant=True)
    sd = math.sqrt(variance)

    diff = u - mu
    if alternative == TWO_SIDED:
        z = math.copysign(max(0.0, abs(diff) - 0.5), diff) / sd
    elif alternative == "greater":
        z = (diff - 0.5) / sd
    else:
        z = (diff + 0.5) / sd

    if n <= EXACT_MAX_TOTAL and len(ties) == n:
        le, ge = _exact_tail_probs(u, n1, n2)
        if alternative == TWO_SIDED:
            p = min(1.0, 2 * min(le, ge))
        elif alternative == "greater":
            p = ge
        else:
            p = le
        return RankSumResult(u, z, p, EXACT, n1, n2, alternative)

    if alternative == TWO_SIDED:
        p = min(1.0, 2 * _normal_sf(abs(z)))
    elif alternative == "greater":
        p = _normal_sf(z)
    else:
        p = _normal_sf(-z)
    # keep p inside (0, 1] when the tail underflows
    p = min(1.0, max(p, sys.float_info.min))
    return RankSumResult(u, z, p, NORMAL, n1, n2, alternative)


def welch_t_test(x: Sequence[float], y: Sequence[float], alternative: str = TWO_SIDED) -> TTestResult:
    """Unequal-variance t-test, offered for sensitivity checks."""
    from scipy import stats as sps

    if len(x) < 2 or len(y) < 2:
        raise ValueError("t-test needs at least two observations per sample")
    res = sps.ttest_ind(x, y, equal_var=False, alternative=alternative)
    return TTestResult(float(res.statistic), float(res.pvalue), len(x), len(y), alternative)


def pearson(pairs: Sequence[tuple[float, float]]) -> CorrelationResult:
    if len(pairs) < 3:
        raise ValueError("correlation needs at least 3 pairs")
    xs = [float(p[0]) for p in pairs]
    ys = [float(p[1]) for p in pairs]
    n = len(pairs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for a constant coordinate")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return CorrelationResult(max(-1.0, min(1.0, r)), n)


# --------------------------------------------------------------------------
# null calibration
# --------------------------------------------------------------------------


def _calibration_chunk(jobs):
    out = []
    for seed, n, alpha in jobs:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n).tolist()
        y = rng.standard_normal(n).tolist()
        out.append(rank_sum_test(x, y).p_value < alpha)
    return out


def null_rejection_rate(
    trials: int = 1000, n: int = 200, alpha: float = 0.05, seed: int = 0, workers: int = 1
) -> float:
    """Share of same-distribution trials the two-sided test rejects.

    Each trial draws from its own child seed, so the rate does not depend on
    how trials are split across workers.
    """
    children = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(child, n, alpha) for child in children]
    rejections = map_chunks(_calibration_chunk, jobs, workers)
    return sum(rejections) / trials


def sample_values(values: Sequence[Optional[float]]) -> list[float]:
    """Drop missing entries."""
    return [v for v in values if v is not None]
