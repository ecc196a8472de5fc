import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regtrees.exactnum import pairing_count
from regtrees.pairing import (
    Multigraph,
    Pairing,
    cycle_counts,
    enumerate_pairings,
    falling_product,
    is_simple,
    iter_pairings,
    make_rng,
    multigraph_from_key,
    project,
    projection_counts,
    sample_pairing,
)
from regtrees.montecarlo import sample_batch

from oracles import brute_cycle_counts

K4 = Multigraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


def test_sample_small():
    p = sample_pairing(3, 2, make_rng(1))
    g = project(p)
    assert g.degree(0) == g.degree(1) == 3
    g = project(sample_pairing(1, 2, make_rng(0)))
    assert g.edges() == [(0, 1)]


def test_pairing_validates_involution():
    with pytest.raises(ValueError):
        Pairing(1, 2, (0, 1))
    with pytest.raises(ValueError):
        Pairing(3, 1, (1, 0, 2))


@pytest.mark.parametrize("d, n, expected", [(3, 4, 10395), (1, 2, 1), (2, 2, 3)])
def test_enumeration_counts(d, n, expected):
    assert enumerate_pairings(d, n, lambda p: None) == expected == pairing_count(d * n)


def test_enumeration_is_distinct():
    seen = {p.mate for p in iter_pairings(2, 4)}
    assert len(seen) == pairing_count(8)


def test_enumeration_size_limit():
    with pytest.raises(ValueError):
        enumerate_pairings(4, 5, lambda p: None)


@pytest.mark.parametrize("d, n", [(2, 3), (3, 4), (4, 3), (2, 5)])
def test_projection_counts_agree_with_enumeration(d, n):
    direct = Counter(project(p).key() for p in iter_pairings(d, n))
    assert projection_counts(d, n) == dict(direct)


def test_projection_examples():
    loop = project(Pairing(2, 1, (1, 0)))
    assert loop.mult[0, 0] == 1 and loop.degree(0) == 2
    triple = project(Pairing(3, 2, (3, 4, 5, 0, 1, 2)))
    assert triple.mult[0, 1] == 3


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 12), st.integers(0, 2**32))
def test_projection_degrees(d, n, seed):
    if d * n % 2:
        n += 1
    g = project(sample_pairing(d, n, make_rng(seed)))
    assert all(g.degree(v) == d for v in range(n))
    assert sum(g.degree(v) for v in range(n)) == d * n
    assert (g.mult == g.mult.T).all()


def test_is_simple_examples():
    assert is_simple(Multigraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]))
    assert not is_simple(Multigraph.from_edges(1, [(0, 0)]))
    assert not is_simple(Multigraph.from_edges(2, [(0, 1), (0, 1)]))


def test_cycle_count_examples():
    assert cycle_counts(K4, 4) == [0, 0, 4, 3]
    assert cycle_counts(Multigraph.from_edges(1, [(0, 0)]), 2) == [1, 0]
    assert cycle_counts(Multigraph.from_edges(2, [(0, 1)] * 3), 3) == [0, 3, 0]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([(3, 4), (3, 6), (4, 5), (5, 4), (3, 8)]))
def test_cycle_counts_match_brute_force(seed, dn):
    d, n = dn
    g = project(sample_pairing(d, n, make_rng(seed)))
    m = min(n, 6)
    assert cycle_counts(g, m) == brute_cycle_counts(g.mult, m)


def test_uniformity_over_small_enumeration():
    draws = 100_000
    rng = make_rng(2024)
    hits = Counter(sample_pairing(2, 3, rng).mate for _ in range(draws))
    assert len(hits) == 15
    p = 1 / 15
    sigma = math.sqrt(draws * p * (1 - p))
    for count in hits.values():
        assert abs(count - draws * p) < 5 * sigma


@pytest.mark.parametrize("d, n", [(2, 3), (3, 4)])
def test_simple_graphs_have_d_factorial_n_preimages(d, n):
    counts = projection_counts(d, n)
    simple = [w for key, w in counts.items() if is_simple(multigraph_from_key(n, key))]
    assert simple
    assert set(simple) == {math.factorial(d) ** n}


def test_simple_fraction_small_n():
    # at n=4 the exact simple fraction is 1296/10395, well away from e^-2
    counts = projection_counts(3, 4)
    simple = sum(w for key, w in counts.items() if is_simple(multigraph_from_key(4, key)))
    assert simple == 1296
    batch = sample_batch(3, 4, 100_000, seed=11, m=0, want_tau=False)
    rate = batch.simple.mean()
    se = math.sqrt(rate * (1 - rate) / len(batch))
    assert abs(rate - simple / 10395) < 3 * se


def test_poisson_means_of_loops_and_double_edges():
    batch = sample_batch(3, 100, 10_000, seed=5, m=2, want_tau=False)
    for j in range(2):
        x = batch.cycles[:, j]
        se = x.std(ddof=1) / math.sqrt(len(x))
        assert abs(x.mean() - 1.0) < 4 * se


def test_falling_product():
    assert falling_product([5, 4], [2, 1]) == 20 * 4
    assert falling_product([1], [2]) == 0
    assert falling_product([3], []) == 1


def test_multigraph_key_round_trip():
    assert multigraph_from_key(4, K4.key()) == K4
    assert hash(multigraph_from_key(4, K4.key())) == hash(K4)
