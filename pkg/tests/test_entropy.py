import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcix.entropy import (
    DiscretizedSeries,
    apen,
    apen_relative,
    conditional,
    conditional_pmf,
    discretize,
    information_report,
    mean_block_similarity,
    self_entropy,
    self_entropy_pmf,
    shannon,
    shannon_pmf,
    shuffle_significance,
    transfer_entropy,
    transfer_entropy_pmf,
)
from fcix.errors import DegenerateSeries, LengthMismatch, NonPositiveTolerance, SeriesTooShort


def naive_apen(x, m, r):
    """Textbook double loop, used as an oracle."""
    def phi(mm):
        blocks = [x[i : i + mm] for i in range(len(x) - mm + 1)]
        logs = []
        for b in blocks:
            c = sum(max(abs(p - q) for p, q in zip(b, o)) <= r for o in blocks)
            logs.append(math.log(c / len(blocks)))
        return sum(logs) / len(logs)

    return phi(m) - phi(m + 1)


def coin(rng, n):
    return rng.integers(0, 2, n).astype(float)


# approximate entropy

def test_apen_against_naive(rng):
    for _ in range(5):
        x = rng.normal(size=60)
        assert apen(x, 2, 0.3) == pytest.approx(naive_apen(list(x), 2, 0.3), abs=1e-12)
    x = rng.normal(size=40)
    assert apen(x, 1, 0.5) == pytest.approx(naive_apen(list(x), 1, 0.5), abs=1e-12)


def test_apen_constant_is_zero():
    assert apen(np.full(50, 4.0), 2, 0.1) == 0.0
    assert apen_relative(np.full(50, 4.0)) == 0.0


def test_apen_period_two_below_noise():
    alt = np.tile([0.0, 1.0], 100)
    low = apen_relative(alt)
    wins = sum(low < apen_relative(np.random.default_rng(s).uniform(size=200)) for s in range(50))
    assert wins >= 48


def test_apen_affine_invariance(rng):
    x = rng.normal(size=150)
    assert apen(3.7 * x - 11.0, 2, 0.2 * 3.7) == pytest.approx(apen(x, 2, 0.2), abs=1e-12)
    assert apen_relative(5 * x + 2) == pytest.approx(apen_relative(x), abs=1e-12)


def test_apen_errors():
    with pytest.raises(SeriesTooShort):
        apen([1.0, 2.0, 3.0], 2, 0.2)
    with pytest.raises(NonPositiveTolerance):
        apen(np.arange(10.0), 2, 0.0)


def test_block_similarity_is_a_fraction(rng):
    x = rng.normal(size=80)
    v = mean_block_similarity(x, 2, 0.2)
    assert 0 < v <= 1
    assert mean_block_similarity(np.ones(20), 2, 0.2) == 1.0


# discretization

def test_discretize_examples():
    assert discretize([1, 2, 3, 4], 2).symbols.tolist() == [0, 0, 1, 1]
    sym = np.array([0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1, 1])
    assert discretize(sym, 2).symbols.tolist() == sym.tolist()
    with pytest.raises(DegenerateSeries):
        discretize([1.0, 1.0, 2.0], 3)


def test_discretize_normal_frequencies():
    d = discretize(np.random.default_rng(3).normal(size=3000), 3)
    freq = np.bincount(d.symbols, minlength=3) / 3000
    assert np.all(np.abs(freq - 1 / 3) <= 0.02)
    assert np.all(np.diff(d.edges) >= 0)
    assert d.symbols.max() < 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=4, max_size=60).filter(lambda s: 0 < sum(s) < len(s)))
def test_binary_input_unchanged(bits):
    assert discretize(np.array(bits, dtype=float), 2).symbols.tolist() == bits


# exact tables

def test_exact_table_examples():
    assert shannon_pmf(np.full(4, 0.25)) == pytest.approx(math.log(4))
    assert conditional_pmf(np.eye(3) / 3) == pytest.approx(0.0, abs=1e-15)
    pz, pv = np.array([0.2, 0.5, 0.3]), np.array([0.6, 0.4])
    assert conditional_pmf(np.outer(pz, pv)) == pytest.approx(shannon_pmf(pz), abs=1e-12)
    # period 2: present and past are a deterministic pair
    assert self_entropy_pmf(np.array([[0, 0.5], [0.5, 0]])) == pytest.approx(math.log(2), abs=1e-15)
    # z_t = v_{t-1}, v a fair coin: table [z_t, z_past, v_past]
    p = np.zeros((2, 2, 2))
    for z_past in range(2):
        for v_past in range(2):
            p[v_past, z_past, v_past] = 0.25
    assert transfer_entropy_pmf(p) == pytest.approx(math.log(2), abs=1e-15)
    prod = np.einsum("i,j,k->ijk", pz, np.array([0.1, 0.2, 0.7]), np.array([0.5, 0.25, 0.25]))
    assert transfer_entropy_pmf(prod) == pytest.approx(0.0, abs=1e-12)


def _random_table(seed, shape):
    p = np.random.default_rng(seed).dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    return p


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 4))
def test_exact_table_bounds(seed, b):
    p = _random_table(seed, (b, b, b))
    h_cond_past = conditional_pmf(p.sum(axis=2))
    te = transfer_entropy_pmf(p)
    assert -1e-12 <= te <= h_cond_past + 1e-9
    p2 = p.sum(axis=2)
    s = self_entropy_pmf(p2)
    assert -1e-12 <= s <= shannon_pmf(p2.sum(axis=1)) + 1e-9
    assert conditional_pmf(p2) >= -1e-12


# sample estimators

def test_sample_estimators_simple(rng):
    alt = np.tile([0.0, 1.0], 200)
    # 399 present symbols split 200/199, so the plug-in value sits just below log 2
    assert self_entropy(alt, 1, 2) == pytest.approx(math.log(2), abs=1e-5)
    d = discretize(np.arange(400.0) % 4, 4)
    assert shannon(d) == pytest.approx(math.log(4))
    assert conditional(d, d) == pytest.approx(0.0, abs=1e-12)
    v = coin(rng, 5000)
    z = np.r_[0.0, v[:-1]]
    assert transfer_entropy(v, z, 1, 2) == pytest.approx(math.log(2), abs=0.01)
    iid = rng.normal(size=20000)
    assert 0 <= self_entropy(iid, 1, 3) < 0.002


def test_short_series_warn_and_fail(rng):
    with pytest.warns(RuntimeWarning):
        self_entropy(rng.normal(size=40), 1, 3)
    with pytest.raises(SeriesTooShort):
        self_entropy([0.0, 1.0], 1, 2)
    with pytest.raises(LengthMismatch):
        transfer_entropy(rng.normal(size=50), rng.normal(size=51))


def test_coupled_pair_direction():
    wins = 0
    for s in range(50):
        rng = np.random.default_rng(s)
        v = rng.normal(size=2000)
        z = np.r_[0.0, 0.7 * v[:-1]] + rng.normal(0, 0.5, 2000)
        wins += transfer_entropy(v, z) > transfer_entropy(z, v)
    assert wins >= 48


def test_shuffle_independent_pair():
    passed = 0
    for s in range(100):
        rng = np.random.default_rng(1000 + s)
        passed += shuffle_significance(rng.normal(size=400), rng.normal(size=400), seed=s) > 0.05
    assert passed >= 90


def test_shuffle_deterministic_copy(rng):
    v = rng.normal(size=500)
    z = np.r_[v[-1], v[:-1]]
    assert shuffle_significance(v, z) <= 0.01


def test_shuffle_all_ties():
    alt = np.tile([0.0, 1.0], 100)
    assert shuffle_significance(alt, alt, 1, 2, 99) == 1.0
    with pytest.raises(ValueError):
        shuffle_significance(alt, alt, 1, 2, 10)


def test_information_report(rng):
    v = rng.normal(size=1500)
    z = np.r_[0.0, 0.7 * v[:-1]] + rng.normal(0, 0.5, 1500)
    rep = information_report(z, v, n_shuffles=99)
    assert rep.transfer_source_to_target > rep.transfer_target_to_source
    assert rep.p_source_to_target <= 0.01
    assert all(val >= -1e-12 for val in (rep.shannon, rep.conditional, rep.self_entropy))
    bits = information_report(z, v, n_shuffles=0, log_base=2)
    assert bits.unit == "bits"
    assert bits.shannon == pytest.approx(rep.shannon / math.log(2))
    assert rep == information_report(z, v, n_shuffles=99)
