"""Exact randomization distribution of the difference-in-means statistic.

The statistic of a hypothesized table depends on the random assignment only
through the *treatment split* ``x = (x11, x10, x01, x00)``: how many subjects
of each potential-outcome class land in the treatment group.  Under complete
randomization the split is multivariate hypergeometric,

    P(x) = C(v11,x11) C(v10,x10) C(v01,x01) C(v00,x00) / C(n,m),

so the full distribution is obtained by enumerating splits instead of the
exponentially many assignments.  For equal group sizes the statistic further
collapses to ``(s1 - s0)/m`` with ``s1 - s0 = 2*x11 + (x10 + x01) - (v11 + v01)``,
so the classes (1,0) and (0,1) can be pooled (Vandermonde), cutting the
enumeration to a 2-D grid.  Both reductions are covered by brute-force
equivalence tests against direct assignment enumeration.

Two arithmetic modes:

- ``rational``: integer split weights over the common denominator C(n,m);
  every probability is exact.  Comfortable up to n around 64; this is the
  oracle mode used by all correctness sweeps.
- ``float``: log-space binomial weights, exponentiated and summed in float64.
  The extremeness *indicator* of each grid point is still decided in integer
  arithmetic; only probabilities are approximate, with a documented 1e-12
  tolerance.  Acceptance decisions in this mode treat p-values within the
  tolerance of the level as accepted, the direction that preserves coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    CapacityError,
    CountVector,
    Design,
    ExactStat,
    ObservedCounts,
    ScaledEffect,
    ValidationError,
    alpha_fraction,
)

#: Float-mode probabilities are accurate to this absolute tolerance, and
#: float-mode acceptance treats ``p >= alpha - FLOAT_P_TOL`` as acceptance.
FLOAT_P_TOL = 1e-12

#: Beyond this the float-mode grid enumeration is not sensible to attempt.
FLOAT_MODE_MAX_N = 5000


@dataclass(frozen=True)
class TreatmentSplit:
    """Counts of each potential-outcome class assigned to treatment."""

    x11: int
    x10: int
    x01: int
    x00: int

    def astuple(self) -> tuple[int, int, int, int]:
        return (self.x11, self.x10, self.x01, self.x00)


@dataclass(frozen=True)
class StatPmf:
    """Distribution of the statistic, as (value, probability) pairs.

    Entries are sorted by statistic value.  Probabilities are Fractions in
    rational mode and floats in float mode.
    """

    entries: tuple[tuple[ExactStat, Fraction | float], ...]
    design: Design
    mode: str

    def support(self) -> tuple[ExactStat, ...]:
        return tuple(v for v, _ in self.entries)

    def total(self) -> Fraction | float:
        return sum(p for _, p in self.entries)

    def mean(self) -> Fraction:
        """Exact mean; rational mode only."""
        if self.mode != "rational":
            raise ValidationError("exact mean requires rational mode")
        return sum((v.fraction * p for v, p in self.entries), Fraction(0))


def _check_v_d(v: CountVector, d: Design) -> None:
    if v.n != d.n:
        raise ValidationError(f"count vector sums to {v.n}, design has n={d.n}")


def split_weights(v: CountVector, d: Design) -> dict[int, int]:
    """Integer weight of each statistic value, keyed by its numerator.

    The weight of numerator ``num`` is the number of assignments whose split
    produces statistic ``num / (m*(n-m))``; weights sum to C(n,m).
    """
    _check_v_d(v, d)
    m, u = d.m, d.controls
    if d.balanced:
        return {m * t: w for t, w in _diff_weights_balanced(v, m).items()}
    v11, v10, v01, v00 = v.astuple()
    comb = math.comb
    weights: dict[int, int] = {}
    base = -(v11 + v01) * m
    for x11 in range(max(0, m - v10 - v01 - v00), min(v11, m) + 1):
        w11 = comb(v11, x11)
        r1 = m - x11
        for x10 in range(max(0, r1 - v01 - v00), min(v10, r1) + 1):
            w10 = w11 * comb(v10, x10)
            r2 = r1 - x10
            num_head = base + (x11 + x10) * u + x11 * m
            for x01 in range(max(0, r2 - v00), min(v01, r2) + 1):
                wt = w10 * comb(v01, x01) * comb(v00, r2 - x01)
                num = num_head + x01 * m
                weights[num] = weights.get(num, 0) + wt
    return weights


def _diff_weights_balanced(v: CountVector, m: int) -> dict[int, int]:
    """Weights of ``t = s1 - s0`` for equal groups, pooling the contrast classes."""
    v11, v10, v01, v00 = v.astuple()
    c = v10 + v01
    comb = math.comb
    weights: dict[int, int] = {}
    shift = v11 + v01
    for x11 in range(max(0, m - c - v00), min(v11, m) + 1):
        w11 = comb(v11, x11)
        r = m - x11
        for w in range(max(0, r - v00), min(c, r) + 1):
            wt = w11 * comb(c, w) * comb(v00, r - w)
            t = 2 * x11 + w - shift
            weights[t] = weights.get(t, 0) + wt
    return weights


def exact_pmf(v: CountVector, d: Design, mode: str = "rational") -> StatPmf:
    """Distribution of the statistic over uniform re-randomization of ``v``."""
    _check_v_d(v, d)
    if mode == "rational":
        total = math.comb(d.n, d.m)
        weights = split_weights(v, d)
        entries = tuple(
            (ExactStat(num, d.m, d.controls), Fraction(weights[num], total))
            for num in sorted(weights)
        )
        return StatPmf(entries, d, mode)
    if mode == "float":
        nums, probs = _float_support(v, d)
        entries = tuple(
            (ExactStat(int(num), d.m, d.controls), float(p)) for num, p in zip(nums, probs)
        )
        return StatPmf(entries, d, mode)
    raise ValidationError(f"unknown mode {mode!r}")


def _log_binom_table(n: int) -> np.ndarray:
    logfact = np.zeros(n + 1)
    logfact[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=np.float64)))
    return logfact


def _float_support(v: CountVector, d: Design) -> tuple[np.ndarray, np.ndarray]:
    """Support numerators and float probabilities, aggregated over the grid."""
    nums, logw = _float_grid(v, d)
    order = np.argsort(nums, kind="stable")
    nums, logw = nums[order], logw[order]
    uniq, start = np.unique(nums, return_index=True)
    probs = np.add.reduceat(np.exp(logw), start)
    return uniq, probs


def _float_grid(v: CountVector, d: Design) -> tuple[np.ndarray, np.ndarray]:
    """Flat arrays of statistic numerators and log-probabilities per grid cell."""
    if d.n > FLOAT_MODE_MAX_N:
        raise CapacityError(
            f"float-mode enumeration is limited to n <= {FLOAT_MODE_MAX_N}, got n={d.n}"
        )
    m, u = d.m, d.controls
    logfact = _log_binom_table(d.n)

    def logC(nn: np.ndarray | int, kk: np.ndarray) -> np.ndarray:
        return logfact[nn] - logfact[kk] - logfact[np.asarray(nn) - kk]

    log_total = float(logC(d.n, np.asarray(m)))
    v11, v10, v01, v00 = v.astuple()
    if d.balanced:
        c = v10 + v01
        x11 = np.arange(max(0, m - c - v00), min(v11, m) + 1, dtype=np.int64)
        w = np.arange(0, min(c, m) + 1, dtype=np.int64)
        X, W = np.meshgrid(x11, w, indexing="ij")
        R = m - X - W
        ok = (R >= 0) & (R <= v00) & (W <= c)
        X, W, R = X[ok], W[ok], R[ok]
        logp = logC(v11, X) + logC(c, W) + logC(v00, R) - log_total
        t = 2 * X + W - (v11 + v01)
        return (t * m).astype(np.int64), logp
    nums_parts: list[np.ndarray] = []
    logw_parts: list[np.ndarray] = []
    x10 = np.arange(0, min(v10, m) + 1, dtype=np.int64)
    x01 = np.arange(0, min(v01, m) + 1, dtype=np.int64)
    X10, X01 = np.meshgrid(x10, x01, indexing="ij")
    for x11 in range(max(0, m - v10 - v01 - v00), min(v11, m) + 1):
        R = m - x11 - X10 - X01
        ok = (R >= 0) & (R <= v00) & (X10 + X01 <= m - x11)
        if not ok.any():
            continue
        a10, a01, rr = X10[ok], X01[ok], R[ok]
        logp = (
            logC(v11, np.asarray(x11))
            + logC(v10, a10)
            + logC(v01, a01)
            + logC(v00, rr)
            - log_total
        )
        num = (x11 + a10) * u + (x11 + a01) * m - (v11 + v01) * m
        nums_parts.append(num.astype(np.int64))
        logw_parts.append(logp)
    return np.concatenate(nums_parts), np.concatenate(logw_parts)


def observed_gap(v: CountVector, obs: ObservedCounts) -> int:
    """``|T_obs - tau(v)|`` as an integer over the denominator n*m*(n-m)."""
    d = obs.design
    num_obs = obs.n11 * d.controls - obs.n01 * d.m
    s = v.v10 - v.v01
    return abs(num_obs * obs.n - s * d.m * d.controls)


def exact_pvalue(
    v: CountVector, obs: ObservedCounts, mode: str = "rational"
) -> Fraction | float:
    """Two-sided permutation p-value of ``v`` against the observed counts.

    ``P(|T - tau(v)| >= |T_obs - tau(v)|)`` under re-randomization of ``v``,
    with the comparison done by cross-multiplication so that lattice ties are
    scored exactly in both modes.
    """
    if v.n != obs.n:
        raise ValidationError("table and observed counts describe different n")
    d = obs.design
    gap = observed_gap(v, obs)
    s = v.v10 - v.v01
    D = d.m * d.controls
    if mode == "rational":
        weights = split_weights(v, d)
        hit = sum(w for num, w in weights.items() if abs(num * obs.n - s * D) >= gap)
        return Fraction(hit, math.comb(d.n, d.m))
    if mode == "float":
        nums, logw = _float_grid(v, d)
        mask = np.abs(nums * obs.n - s * D) >= gap
        if not mask.any():
            return 0.0
        return float(np.sum(np.exp(logw[mask])))
    raise ValidationError(f"unknown mode {mode!r}")


def copas_pmf_term(
    v: CountVector, d: Design, s1: int, s0: int, mode: str = "rational"
) -> Fraction | float:
    """Probability that a split shows ``s1`` treated-group and ``s0``
    control-group successes.

    Closed form: sum over the free coordinate ``x = x11`` of the product of
    four binomials, normalized by C(n,m).
    """
    _check_v_d(v, d)
    v11, v10, v01, v00 = v.astuple()
    m = d.m
    if not (0 <= s1 <= m and 0 <= s0 <= v11 + v01):
        return Fraction(0) if mode == "rational" else 0.0

    def comb0(nn: int, kk: int) -> int:
        return math.comb(nn, kk) if 0 <= kk <= nn else 0

    acc = 0
    for x in range(0, min(v11, s1) + 1):
        acc += (
            comb0(v11, x)
            * comb0(v10, s1 - x)
            * comb0(v01, v11 + v01 - s0 - x)
            * comb0(v00, m - v11 - s1 - v01 + s0 + x)
        )
    result = Fraction(acc, math.comb(d.n, m))
    return result if mode == "rational" else float(result)


class PvalueCache:
    """Memoized exact p-values against one fixed set of observed counts.

    Keyed by the count vector; repeated tables across an interval search are
    evaluated once.  One instance belongs to one search (single-threaded),
    which keeps it trivially safe.
    """

    def __init__(self, obs: ObservedCounts, mode: str = "rational") -> None:
        self.obs = obs
        self.mode = mode
        self._cache: dict[tuple[int, int, int, int], Fraction | float] = {}
        self.hits = 0

    def pvalue(self, v: CountVector) -> Fraction | float:
        key = v.astuple()
        got = self._cache.get(key)
        if got is not None:
            self.hits += 1
            return got
        p = exact_pvalue(v, self.obs, self.mode)
        self._cache[key] = p
        return p

    @property
    def distinct_tables(self) -> int:
        return len(self._cache)


class ExactTester:
    """Accept/reject tables at level alpha using exact permutation p-values.

    In rational mode the comparison ``p >= alpha`` is exact.  In float mode
    p-values within FLOAT_P_TOL of alpha are accepted, which can only widen
    intervals and therefore cannot hurt coverage.
    """

    def __init__(self, obs: ObservedCounts, alpha: float | Fraction, mode: str = "rational"):
        self.alpha = alpha_fraction(alpha)
        self.mode = mode
        self.cache = PvalueCache(obs, mode)
        self._alpha_float = float(self.alpha)

    def decide(self, v: CountVector, key: tuple[int, int, int] | None = None) -> bool:
        p = self.cache.pvalue(v)
        if self.mode == "rational":
            return p >= self.alpha
        return p >= self._alpha_float - FLOAT_P_TOL

    @property
    def distinct_tables(self) -> int:
        return self.cache.distinct_tables


def pmf_is_symmetric(pmf: StatPmf, center: ScaledEffect) -> bool:
    """Exact mirror symmetry of a rational-mode pmf about ``center``.

    ``2 * center`` in statistic-numerator units is an integer for every table
    mean, so the mirror of each support point is itself a lattice point.
    """
    if pmf.mode != "rational":
        raise ValidationError("symmetry check requires rational mode")
    D = pmf.design.m * pmf.design.controls
    twice_center = 2 * center.s * D
    if twice_center % center.n:
        return False
    twice_center //= center.n
    table = {v.num: p for v, p in pmf.entries}
    return all(table.get(twice_center - num) == p for num, p in table.items())
