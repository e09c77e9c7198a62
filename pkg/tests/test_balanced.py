import math
from fractions import Fraction

import pytest

from permci.core import CountVector, ObservedCounts, ValidationError, c_set, neyman
from permci.balanced import (
    binary_search,
    fast_interval_balanced,
    is_compatible_balanced,
)
from permci.exactdist import ExactTester, exact_pvalue

from _oracles import all_count_vectors, all_observed


class CountingStep:
    """Step function 1{x > r} that counts its evaluations."""

    def __init__(self, r):
        self.r = r
        self.evals = 0

    def __call__(self, x):
        self.evals += 1
        return 1 if x > self.r else 0


def test_binary_search_examples():
    f = CountingStep(5)
    assert binary_search(f, 1, 8) == 5
    assert binary_search(lambda x: 1, 1, 8) == 0  # all-ones: threshold below range
    assert binary_search(lambda x: 0, 1, 8) == 8  # all-zeros: threshold at top


def test_binary_search_exhaustive_with_eval_bound():
    for k1 in (-7, 0, 3):
        for width in range(1, 40):
            k2 = k1 + width
            bound = math.floor(math.log2(k2 - k1 + 1) + 2)
            for r in range(k1 - 1, k2 + 1):
                f = CountingStep(r)
                assert binary_search(f, k1, k2) == r
                assert f.evals <= bound, (k1, k2, r, f.evals, bound)


def test_binary_search_rejects_bad_range():
    with pytest.raises(ValidationError):
        binary_search(lambda x: 0, 3, 3)


def brute_compatible(ntau0, obs, alpha):
    """Independent definition: some possible table with this effect accepted."""
    from permci.feasibility import is_possible_bruteforce

    for v in all_count_vectors(obs.n):
        if v.v10 - v.v01 != ntau0:
            continue
        if not is_possible_bruteforce(v, obs):
            continue
        if exact_pvalue(v, obs) >= Fraction(alpha):
            return True
    return False


def test_compatibility_scan_matches_bruteforce():
    alpha = 0.05
    for n in (2, 4, 6, 8, 10, 12):
        m = n // 2
        for obs in all_observed(n, m):
            tester = ExactTester(obs, alpha)
            for s in range(c_set(obs).smin, c_set(obs).smax + 1):
                got = is_compatible_balanced(s, obs, tester).compatible
                want = brute_compatible(s, obs, alpha)
                assert got == want, (obs.astuple(), s)


def test_scan_test_budget():
    # At most n+1 tests per effect, 2(n+1) when the effect is zero.
    alpha = 0.01
    for obs in all_observed(10, 5):
        tester = ExactTester(obs, alpha)
        for s in range(c_set(obs).smin, c_set(obs).smax + 1):
            out = is_compatible_balanced(s, obs, tester)
            budget = 2 * (obs.n + 1) if s == 0 else obs.n + 1
            assert out.tests <= budget


def test_estimate_always_compatible():
    # The estimate's own effect value always carries an accepted table.
    for obs in all_observed(8, 4):
        tester = ExactTester(obs, 0.32)
        s = 2 * (obs.n11 - obs.n01)
        assert is_compatible_balanced(s, obs, tester).compatible


def test_effect_outside_interval_is_incompatible():
    obs = ObservedCounts(2, 6, 8, 0)  # interval is [-14, -5] scaled
    tester = ExactTester(obs, 0.05)
    assert not is_compatible_balanced(-4, obs, tester).compatible
    assert is_compatible_balanced(-5, obs, tester).compatible


TABLE1 = [
    ((2, 6, 8, 0), (-14, -5), 24),
    ((6, 4, 4, 6), (-4, 10), 16),
    ((8, 4, 5, 7), (-3, 13), 26),
]


@pytest.mark.parametrize("counts,scaled,reported", TABLE1)
def test_reference_rows_fast(counts, scaled, reported):
    obs = ObservedCounts(*counts)
    res = fast_interval_balanced(0.05, obs)
    assert res.interval.scaled(obs.n) == scaled
    assert res.tests <= 4 * obs.n * math.log2(obs.n)
    assert reported / 2 <= res.tests <= reported * 2


def test_interval_contains_estimate():
    for obs in all_observed(12, 6):
        res = fast_interval_balanced(0.05, obs)
        assert res.interval.contains(neyman(obs).fraction)


def test_alpha_nesting_fast():
    obs = ObservedCounts(5, 3, 2, 6)
    prev = None
    for alpha in (0.32, 0.1, 0.05, 0.01):
        iv = fast_interval_balanced(alpha, obs).interval
        if prev is not None:
            assert iv.contains_interval(prev)
        prev = iv


def test_length_bound_small():
    alpha = 0.05
    bound = math.sqrt(32 * math.log(2 / alpha))
    for obs in all_observed(12, 6):
        iv = fast_interval_balanced(alpha, obs).interval
        assert float(iv.length) <= bound / math.sqrt(obs.n)


def test_rejects_unbalanced():
    with pytest.raises(ValidationError):
        fast_interval_balanced(0.05, ObservedCounts(1, 0, 1, 1))


def test_monotone_step_direction_small():
    # The p-value may only rise along (+1, -1, -1, +1) for equal groups; the
    # scan's single-test-per-line shortcut is exactly this fact.
    for n in (4, 6, 8):
        m = n // 2
        for obs in all_observed(n, m):
            for v in all_count_vectors(n):
                if min(v.v10, v.v01) < 1 or max(v.v10, v.v01) < 2:
                    continue
                stepped = CountVector(v.v11 + 1, v.v10 - 1, v.v01 - 1, v.v00 + 1)
                assert exact_pvalue(stepped, obs) >= exact_pvalue(v, obs), (
                    v.astuple(),
                    obs.astuple(),
                )
