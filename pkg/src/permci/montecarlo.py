"""Approximate permutation tests with provable error control.

A Monte Carlo test draws ``K`` random assignments of the hypothesized table,
computes the fraction ``S`` whose statistic is at least as extreme as the
observed one (the extremeness comparison itself stays in exact integer
arithmetic), and accepts when ``S + eps >= alpha``.  By Hoeffding's
inequality ``S`` misses the exact p-value by more than ``eps`` with
probability at most ``2 exp(-K eps^2)``, which is what the sample-size rules
below union-bound over the tests an interval search performs.

Intervals built from these tests at level ``alpha - eps`` cover the true
effect with probability at least ``1 - alpha`` once ``K`` meets
`required_k_balanced`.  To target coverage ``1 - alpha``, run the search at
level ``alpha - eps``.

Reproducibility: sample ``i`` of the test at site ``(tau0, j, variant)`` is
a function of ``(seed, tau0, j, variant, i)`` alone.  Each test site derives
its own counter-based generator, so results are bit-identical regardless of
how many worker threads execute the scan, and line scans can extend a site's
stream without touching any other site.

Assignments are drawn as per-class treatment splits by chained hypergeometric
draws — the same distribution as summarizing a uniformly shuffled assignment
vector, at O(1) cost per sample instead of O(n).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    CountVector,
    Design,
    Interval,
    ObservedCounts,
    ValidationError,
    alpha_fraction,
)
from .balanced import ScanOutcome, fast_interval_balanced, is_compatible_balanced
from .exactdist import TreatmentSplit, observed_gap
from .feasibility import family_vector, feasible_v10_range


@dataclass(frozen=True)
class McConfig:
    """Parameters of a Monte Carlo interval run.

    ``alpha`` is the level the tests actually use (callers targeting
    coverage ``1 - a`` should pass ``alpha = a - eps``), ``eps`` the
    acceptance slack, ``k`` the number of samples per test, ``seed`` the
    master seed for all substreams.
    """

    alpha: float
    eps: float
    k: int
    seed: int

    def __post_init__(self) -> None:
        a = alpha_fraction(self.alpha)
        e = Fraction(self.eps)
        if not 0 < e < a:
            raise ValidationError(f"need 0 < eps < alpha, got eps={self.eps}, alpha={self.alpha}")
        if self.k < 1:
            raise ValidationError("k must be a positive integer")
        if self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")

    @property
    def accept_count(self) -> int:
        """Smallest hit count accepted: S + eps >= alpha, compared exactly."""
        threshold = (alpha_fraction(self.alpha) - Fraction(self.eps)) * self.k
        return max(0, math.ceil(threshold))


def substream(seed: int, site: tuple[int, int, int], n: int) -> np.random.Generator:
    """Counter-based generator for one test site ``(scaled tau0, j, variant)``."""
    ntau0, j, variant = site
    seq = np.random.SeedSequence([seed, ntau0 + n, j, variant])
    return np.random.Generator(np.random.Philox(seq))


def sample_splits(
    v: CountVector, d: Design, rng: np.random.Generator, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized draw of ``k`` treatment splits of ``v`` under the design.

    Classes are peeled off one at a time with hypergeometric draws against
    the remaining population, which reproduces the distribution of class
    counts in a uniformly random treatment group.
    """
    if v.n != d.n:
        raise ValidationError("table does not match design")
    remaining_sample = np.full(k, d.m, dtype=np.int64)
    remaining_pop = d.n
    out: list[np.ndarray] = []
    for size in (v.v11, v.v10, v.v01):
        rest = remaining_pop - size
        if size == 0:
            x = np.zeros(k, dtype=np.int64)
        elif rest == 0:
            x = remaining_sample.copy()
        else:
            x = rng.hypergeometric(size, rest, remaining_sample)
        out.append(x)
        remaining_sample = remaining_sample - x
        remaining_pop = rest
    out.append(remaining_sample)
    return out[0], out[1], out[2], out[3]


def sample_split(v: CountVector, d: Design, rng: np.random.Generator) -> TreatmentSplit:
    """A single treatment split; see `sample_splits`."""
    x11, x10, x01, x00 = (int(a[0]) for a in sample_splits(v, d, rng, 1))
    return TreatmentSplit(x11, x10, x01, x00)


def extreme_counts(
    v: CountVector,
    obs: ObservedCounts,
    splits: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> int:
    """How many sampled splits are at least as extreme as the observation.

    All comparisons over the common denominator ``n * m * (n-m)``; the only
    approximation in a Monte Carlo test is which splits were drawn.
    """
    d = obs.design
    x11, x10, x01, _ = splits
    s1 = x11 + x10
    s0 = (v.v11 - x11) + (v.v01 - x01)
    num = s1 * d.controls - s0 * d.m
    s = v.v10 - v.v01
    gap = observed_gap(v, obs)
    return int(np.count_nonzero(np.abs(num * obs.n - s * d.m * d.controls) >= gap))


@dataclass(frozen=True)
class McDecision:
    accept: bool
    hits: int
    k: int

    @property
    def s_hat(self) -> float:
        return self.hits / self.k


def mc_test(
    cfg: McConfig, v: CountVector, obs: ObservedCounts, rng: np.random.Generator
) -> McDecision:
    """Fixed-K approximate permutation test of one table."""
    splits = sample_splits(v, obs.design, rng, cfg.k)
    hits = extreme_counts(v, obs, splits)
    return McDecision(hits >= cfg.accept_count, hits, cfg.k)


def required_k_balanced(eps: float, n: int) -> int:
    """Samples per test guaranteeing level-accurate intervals, equal groups.

    Smallest K with ``K >= eps^-2 * ln(8 n log2(n) / eps)``.  The rule is
    derived for ``n >= 15``; for smaller n it is still returned, with a
    warning, and remains conservative in practice.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if n < 2:
        raise ValidationError("need n >= 2")
    if n < 15:
        warnings.warn(
            f"sample-size rule is calibrated for n >= 15 (got n={n}); "
            "returning the formula value anyway",
            UserWarning,
            stacklevel=2,
        )
    return math.ceil(math.log(8 * n * math.log2(n) / eps) / eps**2)


class McTester:
    """Seeded Monte Carlo accept/reject decisions, one substream per site."""

    def __init__(self, cfg: McConfig, obs: ObservedCounts) -> None:
        self.cfg = cfg
        self.obs = obs

    def decide(self, v: CountVector, key: tuple[int, int, int] | None = None) -> bool:
        if key is None:
            raise ValidationError("Monte Carlo tester requires a test-site key")
        rng = substream(self.cfg.seed, key, self.obs.n)
        return mc_test(self.cfg, v, self.obs, rng).accept


def _mc_scan_parallel(tester: McTester, pool: ThreadPoolExecutor, width: int):
    """Compatibility scan running per-line tests concurrently.

    Decisions and counts are identical to the sequential scan: each site has
    its own substream, blocks are collected in line order, and the count
    includes exactly the tests a sequential run would have performed (work
    past the first acceptance inside a block is discarded).  The zero-effect
    scan keeps the sequential path because of its conditional second test.
    """

    def scan(ntau0: int, obs: ObservedCounts, tester_) -> ScanOutcome:
        if ntau0 == 0:
            return is_compatible_balanced(ntau0, obs, tester_)
        n = obs.n
        sites = []
        for j in range(n + 1):
            rng = feasible_v10_range(j, ntau0, obs)
            if rng is not None:
                sites.append((j, family_vector(j, rng.lo, ntau0, n)))
        tests = 0
        for start in range(0, len(sites), width):
            block = sites[start : start + width]
            futures = [
                pool.submit(tester_.decide, v, (ntau0, j, 0)) for j, v in block
            ]
            for fut in futures:
                tests += 1
                if fut.result():
                    return ScanOutcome(True, tests)
        return ScanOutcome(False, tests)

    return scan


@dataclass(frozen=True)
class McSearchResult:
    interval: Interval
    tests: int
    tau0_evaluations: int
    samples_drawn: int
    k: int
    seed: int


def mc_interval_balanced(
    cfg: McConfig, obs: ObservedCounts, threads: int = 1
) -> McSearchResult:
    """Monte Carlo interval for equal group sizes.

    Same control flow as the exact search with `mc_test` substituted per
    site; deterministic given ``(cfg.seed, obs)`` for any thread count.
    """
    d = obs.design
    if not d.balanced:
        raise ValidationError("mc_interval_balanced requires equal group sizes")
    tester = McTester(cfg, obs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scan = _mc_scan_parallel(tester, pool, width=2 * threads)
            res = fast_interval_balanced(cfg.alpha, obs, tester=tester, scan=scan)
    else:
        res = fast_interval_balanced(cfg.alpha, obs, tester=tester)
    return McSearchResult(
        res.interval, res.tests, res.tau0_evaluations, res.tests * cfg.k, cfg.k, cfg.seed
    )
