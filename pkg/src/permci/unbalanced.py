"""Interval construction for arbitrary group sizes.

With unequal groups the two facts the fast balanced search leans on — the
accepted effects forming an interval around the estimate, and the p-value
monotonicity along ``(+1, -1, -1, +1)`` — are no longer available.  The
construction here instead does a descending linear search for the upper
endpoint from the top of the attainable effect range (and an ascending one
for the lower endpoint), still touching only ``O(n^2)`` tested tables per
endpoint:

For a candidate effect and each ``j``, the feasible tables form a line

    v_k = base + k * (-1, +1, +1, -1),   k = 0, 1, ...,

whose points all share the candidate effect.  The base (smallest ``v10``)
gets a fresh Monte Carlo test; the rest of the line *reuses* its samples.
A sampled assignment is summarized by the eight per-class, per-group counts
``q_ab(group)``; moving one subject from class (0,0) to (0,1) and one from
(1,1) to (1,0) — each keeping its group with probability proportional to the
group's share of its class — turns a uniform assignment of ``v_k`` into a
uniform assignment of ``v_{k+1}``.  Stepping all K summaries costs O(K), so
a whole line costs as much as one extra test.

An exact mode evaluates every line point with the exact p-value instead.
It is not faster than the enumeration baseline in spirit, but it makes the
search's accept/reject logic testable against that baseline with no Monte
Carlo noise, and doubles as the oracle path for small problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ContractError,
    CountVector,
    Design,
    ExactStat,
    Interval,
    ObservedCounts,
    ValidationError,
    alpha_fraction,
    c_set,
)
from .exactdist import ExactTester, observed_gap
from .feasibility import family_vector, feasible_v10_range, is_possible
from .montecarlo import McConfig, sample_splits, substream


@dataclass(frozen=True)
class AssignmentSummary:
    """Counts of each potential-outcome class in each group for one assignment."""

    q11: tuple[int, int]  # (control count, treatment count) of class (1,1)
    q10: tuple[int, int]
    q01: tuple[int, int]
    q00: tuple[int, int]

    def table(self) -> CountVector:
        return CountVector(
            sum(self.q11), sum(self.q10), sum(self.q01), sum(self.q00)
        )

    def validate(self, d: Design) -> None:
        treated = self.q11[1] + self.q10[1] + self.q01[1] + self.q00[1]
        controls = self.q11[0] + self.q10[0] + self.q01[0] + self.q00[0]
        if treated != d.m or controls != d.controls:
            raise ValidationError("summary group totals do not match the design")


def stat_from_summary(q: AssignmentSummary, d: Design) -> ExactStat:
    """Difference in group means of the assignment the summary describes."""
    q.validate(d)
    num = (q.q11[1] + q.q10[1]) * d.controls - (q.q11[0] + q.q01[0]) * d.m
    return ExactStat(num, d.m, d.controls)


def step_summary(q: AssignmentSummary, rng: np.random.Generator) -> AssignmentSummary:
    """Resummarize after converting one (0,0) subject to (0,1) and one (1,1)
    subject to (1,0), each chosen uniformly within its class.

    Keeping each converted subject's group with probability proportional to
    the group's share of its class makes the output distributed as a uniform
    assignment of the stepped table, whenever the input was one of the
    original table.
    """
    v00 = sum(q.q00)
    v11 = sum(q.q11)
    if v00 < 1 or v11 < 1:
        raise ContractError("stepping requires at least one (0,0) and one (1,1) subject")
    q00, q01, q11, q10 = list(q.q00), list(q.q01), list(q.q11), list(q.q10)
    group = 0 if rng.random() * v00 < q00[0] else 1
    q00[group] -= 1
    q01[group] += 1
    group = 0 if rng.random() * v11 < q11[0] else 1
    q11[group] -= 1
    q10[group] += 1
    return AssignmentSummary(tuple(q11), tuple(q10), tuple(q01), tuple(q00))


class SummaryBatch:
    """K assignment summaries of one table, stored column-wise for stepping.

    The instance mutates in place as it walks a line; the statistic of every
    summary is recomputed in O(K) integer vector arithmetic per point.
    """

    def __init__(self, v: CountVector, d: Design, rng: np.random.Generator, k: int):
        x11, x10, x01, x00 = sample_splits(v, d, rng, k)
        self.v = v
        self.d = d
        self.k = k
        self.t11, self.t10, self.t01, self.t00 = x11, x10, x01, x00
        self.c11 = v.v11 - x11
        self.c10 = v.v10 - x10
        self.c01 = v.v01 - x01
        self.c00 = v.v00 - x00

    def step(self, rng: np.random.Generator) -> None:
        v = self.v
        if v.v00 < 1 or v.v11 < 1:
            raise ContractError("stepping requires at least one (0,0) and one (1,1) subject")
        move = rng.random(self.k) * v.v00 < self.c00
        self.c00 = self.c00 - move
        self.c01 = self.c01 + move
        keep = ~move
        self.t00 = self.t00 - keep
        self.t01 = self.t01 + keep
        move = rng.random(self.k) * v.v11 < self.c11
        self.c11 = self.c11 - move
        self.c10 = self.c10 + move
        keep = ~move
        self.t11 = self.t11 - keep
        self.t10 = self.t10 + keep
        self.v = CountVector(v.v11 - 1, v.v10 + 1, v.v01 + 1, v.v00 - 1)

    def extreme_hits(self, obs: ObservedCounts) -> int:
        """Samples whose statistic is at least as extreme as the observation,
        relative to the current table's effect."""
        d = self.d
        num = (self.t11 + self.t10) * d.controls - (self.c11 + self.c01) * d.m
        s = self.v.v10 - self.v.v01
        gap = observed_gap(self.v, obs)
        return int(np.count_nonzero(np.abs(num * obs.n - s * d.m * d.controls) >= gap))

    def summaries(self) -> list[AssignmentSummary]:
        return [
            AssignmentSummary(
                (int(self.c11[i]), int(self.t11[i])),
                (int(self.c10[i]), int(self.t10[i])),
                (int(self.c01[i]), int(self.t01[i])),
                (int(self.c00[i]), int(self.t00[i])),
            )
            for i in range(self.k)
        ]


@dataclass(frozen=True)
class LineSegment:
    """The feasible continuation ``base + k*(-1,+1,+1,-1)``, k = 1..count."""

    base: CountVector
    count: int


def scan_line(
    cfg: McConfig,
    seg: LineSegment,
    obs: ObservedCounts,
    batch: SummaryBatch,
    rng: np.random.Generator,
) -> bool:
    """Walk a line reusing the base samples; True if any point accepts.

    The caller has already tested (and rejected) the base, so the walk starts
    one step in.  Every visited table is asserted possible.
    """
    accepted, _ = _walk_line(cfg, seg, obs, batch, rng)
    return accepted


def _walk_line(
    cfg: McConfig,
    seg: LineSegment,
    obs: ObservedCounts,
    batch: SummaryBatch,
    rng: np.random.Generator,
) -> tuple[bool, int]:
    threshold = cfg.accept_count
    for step in range(1, seg.count + 1):
        batch.step(rng)
        if not is_possible(batch.v, obs):
            raise ContractError(
                f"line point {batch.v.astuple()} is not possible given {obs.astuple()}"
            )
        if batch.extreme_hits(obs) >= threshold:
            return True, step
    return False, seg.count


def required_k_unbalanced(eps: float, n: int) -> int:
    """Samples per test for the general-design search: smallest K with
    ``K >= eps^-2 * ln(4 n^3 / eps)``."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if n < 2:
        raise ValidationError("need n >= 2")
    return math.ceil(math.log(4 * n**3 / eps) / eps**2)


@dataclass(frozen=True)
class UnbalancedResult:
    interval: Interval
    base_tests: int
    line_points: int
    tau0_evaluations: int
    mode: str


def unbalanced_interval(
    obs: ObservedCounts,
    alpha: float | None = None,
    mode: str = "exact",
    cfg: McConfig | None = None,
) -> UnbalancedResult:
    """Interval for any design via linear endpoint searches.

    ``mode="exact"`` requires ``alpha`` and evaluates every line point with
    an exact p-value.  ``mode="mc"`` requires ``cfg`` and runs Monte Carlo
    base tests with sample reuse along lines; deterministic given
    ``(cfg.seed, obs)``.  Returns the empty interval when no attainable
    effect is compatible (possible in principle, and with Monte Carlo noise).
    """
    if mode == "exact":
        if alpha is None:
            raise ValidationError("exact mode requires alpha")
        alpha_fraction(alpha)
    elif mode == "mc":
        if cfg is None:
            raise ValidationError("mc mode requires an McConfig")
        alpha = cfg.alpha
    else:
        raise ValidationError(f"unknown mode {mode!r}")

    tester = ExactTester(obs, alpha) if mode == "exact" else None
    counters = {"base": 0, "line": 0}
    memo: dict[int, bool] = {}

    def compatible(s: int) -> bool:
        got = memo.get(s)
        if got is None:
            if mode == "exact":
                got = _compatible_exact(s, obs, tester, counters)
            else:
                got = _compatible_mc(s, obs, cfg, counters)
            memo[s] = got
        return got

    effects = c_set(obs)
    upper = None
    for s in range(effects.smax, effects.smin - 1, -1):
        if compatible(s):
            upper = s
            break
    if upper is None:
        return UnbalancedResult(
            Interval.empty(), counters["base"], counters["line"], len(memo), mode
        )
    lower = None
    for s in range(effects.smin, upper + 1):
        if compatible(s):
            lower = s
            break
    interval = Interval.from_scaled(lower, upper, obs.n)
    return UnbalancedResult(
        interval, counters["base"], counters["line"], len(memo), mode
    )


def _compatible_exact(
    s: int, obs: ObservedCounts, tester: ExactTester, counters: dict[str, int]
) -> bool:
    n = obs.n
    for j in range(n + 1):
        rng = feasible_v10_range(j, s, obs)
        if rng is None:
            continue
        for v10 in range(rng.lo, rng.hi + 1):
            v = family_vector(j, v10, s, n)
            if v10 == rng.lo:
                counters["base"] += 1
            else:
                counters["line"] += 1
            if tester.decide(v):
                return True
    return False


def _compatible_mc(
    s: int, obs: ObservedCounts, cfg: McConfig, counters: dict[str, int]
) -> bool:
    n = obs.n
    d = obs.design
    for j in range(n + 1):
        rng_range = feasible_v10_range(j, s, obs)
        if rng_range is None:
            continue
        base = family_vector(j, rng_range.lo, s, n)
        rng = substream(cfg.seed, (s, j, 0), n)
        batch = SummaryBatch(base, d, rng, cfg.k)
        counters["base"] += 1
        if batch.extreme_hits(obs) >= cfg.accept_count:
            return True
        seg = LineSegment(base, len(rng_range) - 1)
        if seg.count:
            accepted, points = _walk_line(cfg, seg, obs, batch, rng)
            counters["line"] += points
            if accepted:
                return True
    return False
