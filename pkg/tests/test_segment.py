import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcix.errors import DegenerateWarning, EmptySegment, InfeasiblePartition
from fcix.segment import (
    detect_changepoints,
    elbow_report,
    median_bandwidth,
    segment_cost,
    segment_labels,
)


def direct_cost(x, a, b, gamma):
    seg = np.asarray(x[a:b], dtype=float)
    total = sum(math.exp(-gamma * (s - t) ** 2) for s in seg for t in seg)
    return (b - a) - total / (b - a)


def brute_force(x, k_star, gamma, min_size):
    n = len(x)
    best = None
    for cps in itertools.combinations(range(1, n), k_star):
        bounds = (0, *cps, n)
        if min(e - s for s, e in zip(bounds, bounds[1:])) < min_size:
            continue
        cost = sum(direct_cost(x, s, e, gamma) for s, e in zip(bounds, bounds[1:]))
        if best is None or cost < best[0] - 1e-12:
            best = (cost, cps)
    return best


def test_bandwidth_examples():
    assert median_bandwidth([0.0, 1.0]) == 1.0
    assert median_bandwidth([0.0, 1.0, 2.0]) == 1.0
    with pytest.warns(DegenerateWarning):
        assert median_bandwidth([0.0, 0.0, 0.0]) == 1.0


def test_cost_examples():
    assert segment_cost(np.full(6, 3.0), 0, 6, 1.0) == 0.0
    assert segment_cost([5.0, 7.0], 1, 2, 1.0) == 0.0
    assert segment_cost([0.0, 10.0], 0, 2, 1.0) == pytest.approx(1 - math.exp(-100), abs=1e-15)
    x = np.random.default_rng(0).normal(size=15)
    assert segment_cost(x, 3, 11, 0.7) == pytest.approx(direct_cost(x, 3, 11, 0.7), abs=1e-12)
    assert 0 <= segment_cost(x, 0, 15, 0.7) < 15
    with pytest.raises(EmptySegment):
        segment_cost(x, 4, 4, 1.0)


def test_mean_shift():
    res = detect_changepoints(np.r_[np.zeros(50), np.ones(50)], 1)
    assert res.changepoints == (50,)
    assert res.total_cost == pytest.approx(0.0, abs=1e-9)


def test_constant_series_tie_breaks_to_smallest():
    res = detect_changepoints(np.full(20, 2.5), 1, gamma=1.0)
    assert res.changepoints == (2,)
    assert res.total_cost == 0.0
    res = detect_changepoints(np.full(20, 2.5), 3, gamma=1.0)
    assert res.changepoints == (2, 4, 6)


def test_spec_size_brute_force():
    x = np.random.default_rng(24).normal(size=24)
    res = detect_changepoints(x, 2, gamma=1.0, min_size=1)
    cost, cps = brute_force(x, 2, 1.0, 1)
    assert res.changepoints == cps
    assert res.total_cost == pytest.approx(cost, abs=1e-9)


def test_dp_matches_exhaustive_search():
    rng = np.random.default_rng(100)
    for _ in range(100):
        n = int(rng.integers(8, 31))
        k = int(rng.integers(1, 4))
        x = rng.normal(size=n) + np.repeat(rng.normal(0, 2, 4), -(-n // 4))[:n]
        gamma = median_bandwidth(x)
        res = detect_changepoints(x, k, gamma)
        cost, cps = brute_force(x, k, gamma, 2)
        assert res.total_cost == pytest.approx(cost, abs=1e-9)
        assert res.changepoints == cps


def test_result_invariants(rng):
    x = rng.normal(size=60)
    res = detect_changepoints(x, 3)
    assert res.total_cost == pytest.approx(sum(res.segment_costs), abs=1e-9)
    assert len(res.segment_costs) == 4
    assert all(0 < a < b < 60 for a, b in zip(res.changepoints, res.changepoints[1:]))
    labels = segment_labels(60, res.changepoints)
    assert labels[0] == 0 and labels[-1] == 3


def test_nested_costs_nonincreasing(rng):
    x = rng.normal(size=50)
    costs = [row["total_cost"] for row in elbow_report(x, 6)]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_infeasible():
    with pytest.raises(InfeasiblePartition):
        detect_changepoints(np.arange(5.0), 2, 1.0, min_size=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-1e3, 1e3), st.floats(0.1, 10))
def test_translation_and_scale_invariance(seed, shift, scale):
    x = np.random.default_rng(seed).normal(size=30)
    base = detect_changepoints(x, 2, 0.8)
    moved = detect_changepoints(x + shift, 2, 0.8)
    scaled = detect_changepoints(x * scale, 2, 0.8 / scale**2)
    for other in (moved, scaled):
        assert other.changepoints == base.changepoints
        np.testing.assert_allclose(other.segment_costs, base.segment_costs, atol=1e-9)
