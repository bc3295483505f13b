import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nsft import (
    EnumerationCapError,
    kronecker_product,
    metric_dk,
    parry_frames,
    partition_entropy_closed,
    partition_entropy_direct,
    periodic_spec,
    primitivity_profile,
    topent_trace,
    word_count,
)
from nsft.oracles import oracle_word_counts
from nsft.parry import cylinder_measures, cylinder_measures_closed
from nsft.word_counts import enumerate_words, prefix_word_counts, word_array


@st.composite
def reduced_matrix(draw, size):
    # a permutation matrix plus extra ones: never a zero row or column
    perm = draw(st.permutations(range(size)))
    bits = draw(st.lists(st.integers(0, 1), min_size=size * size, max_size=size * size))
    m = np.array(bits).reshape(size, size)
    m[np.arange(size), perm] = 1
    return m


@st.composite
def periodic_specs(draw, min_size=1):
    size = draw(st.integers(min_size, 3))
    count = draw(st.integers(1, 3))
    mats = {f"M{j}": draw(reduced_matrix(size)) for j in range(count)}
    cycle = draw(st.lists(st.sampled_from(sorted(mats)), min_size=1, max_size=4))
    prefix = draw(st.lists(st.sampled_from(sorted(mats)), max_size=2))
    return periodic_spec(mats, cycle, prefix, name="random")


def primitive(spec, upto=6):
    return all(primitivity_profile(spec, i, 40) is not None for i in range(upto))


@settings(max_examples=60, deadline=None)
@given(periodic_specs(), st.integers(0, 5), st.integers(0, 6), st.integers(0, 6))
def test_count_laws(spec, n, a, b):
    assert word_count(spec, n, n) == spec.alphabet_size(n)
    assert word_count(spec, n, n + a) <= word_count(spec, n, n + a + 1)
    # splitting a word at n + a
    assert word_count(spec, n, n + a + b + 1) <= word_count(spec, n, n + a) * word_count(spec, n + a + 1, n + a + b + 1)
    m = n + a + 1
    assert word_count(spec, 1, m) <= word_count(spec, 0, m) <= spec.alphabet_size(0) * word_count(spec, 1, m)


@settings(max_examples=40, deadline=None)
@given(periodic_specs(), st.integers(0, 3))
def test_enumeration_matches_products(spec, start):
    assert all(r.match for r in oracle_word_counts(spec, 6, starts=(start,)))
    words = enumerate_words(spec, start, start + 4)
    assert words == sorted(set(words))


@settings(max_examples=30, deadline=None)
@given(periodic_specs(), periodic_specs())
def test_kronecker_counts_factor(a, b):
    wp = prefix_word_counts(kronecker_product(a, b), 12)
    assert wp == [x * y for x, y in zip(prefix_word_counts(a, 12), prefix_word_counts(b, 12))]


@settings(max_examples=30, deadline=None)
@given(periodic_specs())
def test_doubling_trace(a):
    t = topent_trace(a, 40).values
    t2 = topent_trace(kronecker_product(a, a), 40).values
    assert np.array_equal(t2, 2 * t)


@settings(max_examples=40, deadline=None)
@given(periodic_specs(min_size=2), st.data())
def test_metric_properties(spec, data):
    words = enumerate_words(spec, 2, 8)
    x = data.draw(st.sampled_from(words))
    y = data.draw(st.sampled_from([w for w in words if w != x]))
    d = metric_dk(spec, 2, x, y)
    assert d == metric_dk(spec, 2, y, x)
    assert 0 < d <= 1
    # extending the agreement can only shrink the distance
    p = next(j for j in range(len(x)) if x[j] != y[j])
    same = [w for w in words if w[: p + 1] == x[: p + 1] and w != x]
    for z in same:
        assert metric_dk(spec, 2, x, z) <= d


@settings(max_examples=30, deadline=None)
@given(periodic_specs(), st.integers(0, 6))
def test_parry_measure_laws(spec, depth):
    assume(primitive(spec))
    chain = parry_frames(spec, 12)
    for k in (0, 3):
        words = word_array(spec, k, k + depth)
        mu = cylinder_measures(chain, k, words)
        assert abs(mu.sum() - 1) < 1e-9
        assert np.allclose(mu, cylinder_measures_closed(chain, k, words), rtol=1e-9, atol=1e-15)
    for i in range(12):
        assert np.allclose(chain.Ps[i].sum(axis=1), 1, atol=1e-12)
        assert np.allclose(chain.pis[i] @ chain.Ps[i], chain.pis[i + 1], atol=1e-10)
        assert chain.lambdas[i] >= 1 - 1e-12


@settings(max_examples=30, deadline=None)
@given(periodic_specs())
def test_partition_entropy_routes_agree(spec):
    assume(primitive(spec))
    chain = parry_frames(spec, 10)
    prev = -math.inf
    for k in range(7):
        try:
            direct = partition_entropy_direct(chain, k)
        except EnumerationCapError:
            break
        assert abs(partition_entropy_closed(spec, chain, k) - direct) < 1e-9
        assert direct >= prev - 1e-12
        prev = direct
