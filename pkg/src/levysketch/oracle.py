"""Ground truth and statistical verification.

Everything the test suites compare against lives here: exact target
distributions computed in closed form from the weight functions (never
through the samplers being tested), the ordered without-replacement law,
closed-form edge weights, and the two goodness-of-fit tests the library
relies on (Pearson chi-square and one-sample Kolmogorov-Smirnov against an
exponential).

Thresholds are one-sided critical values; a report passes iff its statistic
is at or below its threshold.  Suites running many tests at once should
Bonferroni-split their significance across tests (pass alpha = level / m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Iterable, Mapping, Sequence

from scipy.stats import chi2 as _chi2

from .circuits import edge_weight
from .level import WeightFunction, weight_value
from .randomness import OracleHash, derive_seed
from .samplers import ParetoSampler

__all__ = [
    "ExactDistribution",
    "GofReport",
    "UndersampledError",
    "exact_distribution",
    "exact_wor_distribution",
    "exact_edge_distribution",
    "chi_square_gof",
    "ks_test_exponential",
    "frontier_size_stats",
    "FrontierStats",
]

_WOR_MAX_SUPPORT = 8
_WOR_MAX_K = 4


class UndersampledError(ValueError):
    """Too few samples for the test's validity preconditions."""


@dataclass(frozen=True)
class ExactDistribution:
    """A finite probability distribution over identifiers."""

    support: tuple
    probs: tuple

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs must have equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def prob_of(self, ident) -> float:
        try:
            return self.probs[self.support.index(ident)]
        except ValueError:
            return 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))


@dataclass(frozen=True)
class GofReport:
    """Outcome of one goodness-of-fit test at a fixed significance level."""

    statistic: float
    threshold: float
    degrees_of_freedom: int
    passed: bool
    sample_count: int

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "dof": self.degrees_of_freedom,
            "pass": self.passed,
            "samples": self.sample_count,
        }


def exact_distribution(x: Mapping, g: WeightFunction) -> ExactDistribution:
    """The target law: key v with probability G(x(v)) / sum_u G(x(u))."""
    if not x:
        raise ValueError("mass vector is empty")
    for key, mass in x.items():
        if not (mass > 0):
            raise ValueError(f"mass of {key!r} must be positive, got {mass}")
    support = tuple(sorted(x))
    weights = [weight_value(g, x[key]) for key in support]
    total = math.fsum(weights)
    if total <= 0:
        raise ValueError("all keys have zero weight")
    return ExactDistribution(support, tuple(w / total for w in weights))


def exact_wor_distribution(x: Mapping, g: WeightFunction, k: int) -> dict:
    """The ordered without-replacement law over k-tuples of distinct keys:
    each successive key is drawn proportionally to its weight among the
    remaining keys (the sequential-ratio product)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > len(x):
        raise ValueError(f"k={k} exceeds support size {len(x)}")
    if len(x) > _WOR_MAX_SUPPORT or k > _WOR_MAX_K:
        raise ValueError(
            f"enumeration capped at support <= {_WOR_MAX_SUPPORT}, k <= {_WOR_MAX_K}")
    support = sorted(x)
    weights = {key: weight_value(g, x[key]) for key in support}
    total = math.fsum(weights.values())
    out = {}
    for tup in permutations(support, k):
        p = 1.0
        remaining = total
        for key in tup:
            p *= weights[key] / remaining
            remaining -= weights[key]
        out[tup] = p
    assert abs(math.fsum(out.values()) - 1.0) <= 1e-12
    return out


def exact_edge_distribution(
    edges: Iterable[tuple],
    x: Mapping,
    weight: Callable[..., float] = edge_weight,
) -> ExactDistribution:
    """Edge sampled with probability proportional to the weight of its
    endpoint masses (missing vertices count as mass zero)."""
    support = sorted(tuple(sorted(e)) for e in edges)
    if not support:
        raise ValueError("empty edge set")
    weights = [weight(*(float(x.get(v, 0.0)) for v in e)) for e in support]
    total = math.fsum(weights)
    if total <= 0:
        raise ValueError("every edge has zero weight")
    return ExactDistribution(tuple(support), tuple(w / total for w in weights))


def chi_square_gof(
    counts: Mapping,
    expected: ExactDistribution,
    alpha: float = 0.01,
) -> GofReport:
    """Pearson chi-square of observed counts against an exact distribution.

    Counts on identifiers outside the support make the statistic infinite
    (they are impossible under the expected law), failing the report rather
    than raising.
    """
    n = sum(counts.values())
    if n < 50 * len(expected.support):
        raise UndersampledError(
            f"need >= {50 * len(expected.support)} samples, got {n}")
    min_cell = n * min(expected.probs)
    if min_cell < 5:
        raise UndersampledError(
            f"smallest expected cell is {min_cell:.2f}, below 5")
    stray = sum(c for ident, c in counts.items()
                if ident not in set(expected.support))
    dof = len(expected.support) - 1
    threshold = float(_chi2.ppf(1.0 - alpha, dof))
    if stray > 0:
        return GofReport(math.inf, threshold, dof, False, n)
    stat = 0.0
    for ident, p in zip(expected.support, expected.probs):
        exp_count = n * p
        obs = counts.get(ident, 0)
        stat += (obs - exp_count) ** 2 / exp_count
    return GofReport(stat, threshold, dof, stat <= threshold, n)


def _ks_critical(alpha: float, n: int) -> float:
    # asymptotic one-sample critical value c(alpha)/sqrt(n)
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks_test_exponential(
    samples: Sequence[float],
    rate: float,
    alpha: float = 0.01,
) -> GofReport:
    """One-sample Kolmogorov-Smirnov test against Exp(rate)."""
    if not (rate > 0):
        raise ValueError(f"rate must be positive, got {rate}")
    n = len(samples)
    if n < 1000:
        raise UndersampledError(f"need >= 1000 samples, got {n}")
    xs = sorted(samples)
    d = 0.0
    for i, x in enumerate(xs):
        cdf = -math.expm1(-rate * x)
        d = max(d, (i + 1) / n - cdf, cdf - i / n)
    threshold = _ks_critical(alpha, n)
    return GofReport(d, threshold, 0, d <= threshold, n)


@dataclass(frozen=True)
class FrontierStats:
    """Final-size statistics of the Pareto frontier over repeated trials."""

    mean: float
    max_size: int
    stderr: float
    trials: int


def frontier_size_stats(n: int, trials: int, seed: bytes) -> FrontierStats:
    """Final frontier size over `trials` independent runs of n unit updates
    on distinct keys.  The expected size is the n-th harmonic number."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    sizes = []
    for t in range(trials):
        sampler = ParetoSampler(OracleHash(derive_seed(seed, t)))
        for key in range(n):
            sampler.update(key, 1.0)
        sizes.append(len(sampler.frontier))
    mean = math.fsum(sizes) / trials
    if trials > 1:
        var = math.fsum((s - mean) ** 2 for s in sizes) / (trials - 1)
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    return FrontierStats(mean, max(sizes), stderr, trials)
