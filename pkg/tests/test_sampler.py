import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from attralign.core import EmptyPool, top_k
from attralign.sampler import (SAME_ID, SURROGATE, SamplerInput, build_positive_pairs,
                               k_reciprocal_oracle, k_reciprocal_sample)


def make_input(V, T, k, v_offset=0, t_offset=0):
    return SamplerInput([(i + v_offset, v) for i, v in enumerate(V)],
                        [(j + t_offset, t) for j, t in enumerate(T)], k)


def both(inp):
    fast, slow = k_reciprocal_sample(inp), k_reciprocal_oracle(inp)
    assert fast == slow
    return fast


def test_identical_pools_pair_with_their_copies():
    e = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    assert both(make_input(e, e, 1)) == {0: {0}, 1: {1}}


def test_singleton_pools_are_reciprocal():
    assert both(make_input([np.array([1.0, 0.0])], [np.array([0.0, 1.0])], 1)) == {0: {0}}


def test_hand_traced_one_sided_neighbour():
    V = [np.array([1.0, 0.0]), np.array([0.9, 0.1])]
    assert both(make_input(V, [np.array([1.0, 0.0])], 1)) == {0: {0}, 1: set()}


def test_k_covering_both_pools_pairs_everything(rng):
    V, T = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    assert both(make_input(V, T, 5)) == {i: {0, 1, 2, 3} for i in range(5)}


def test_random_n16_d4_k3(rng):
    V, T = rng.normal(size=(16, 4)), rng.normal(size=(16, 4))
    both(make_input(V, T, 3))


def test_empty_pool_and_bad_k():
    with pytest.raises(EmptyPool):
        SamplerInput([], [(0, np.ones(2))], 1)
    with pytest.raises(ValueError):
        SamplerInput([(0, np.ones(2))], [(0, np.ones(2))], 0)


def test_oracle_equivalence_200_instances():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n_v, n_t = rng.integers(2, 65, size=2)
        d = int(rng.choice([2, 8, 16]))
        k = int(rng.choice([1, 4, 8]))
        inp = make_input(rng.normal(size=(n_v, d)), rng.normal(size=(n_t, d)), k, 100, 7)
        both(inp)


@st.composite
def grid_instances(draw, max_n=10):
    """Small integer vectors: exact cosine ties are frequent."""
    d = draw(st.sampled_from([2, 3]))
    vec = arrays(np.float64, d, elements=st.integers(-2, 2).map(float)).filter(lambda v: np.any(v != 0))
    V = draw(st.lists(vec, min_size=1, max_size=max_n))
    T = draw(st.lists(vec, min_size=1, max_size=max_n))
    k = draw(st.integers(1, max_n))
    return V, T, k


@given(grid_instances())
def test_oracle_equivalence_with_ties(inst):
    V, T, k = inst
    both(make_input(V, T, k))


@given(grid_instances())
def test_reciprocity_by_recomputation(inst):
    V, T, k = inst
    result = k_reciprocal_sample(make_input(V, T, k))
    for v, ts in result.items():
        for t in ts:
            assert t in top_k(V[v], T, k)
            assert v in top_k(T[t], V, k)


@given(grid_instances())
def test_k_monotone(inst):
    V, T, k = inst
    small = k_reciprocal_sample(make_input(V, T, k))
    large = k_reciprocal_sample(make_input(V, T, k + 1))
    assert all(small[v] <= large[v] for v in small)


@given(grid_instances(), st.lists(st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]), min_size=20, max_size=20))
def test_scale_invariance(inst, scales):
    V, T, k = inst
    # power-of-two factors keep the normalised vectors bit-identical
    V2 = [v * scales[i % 20] for i, v in enumerate(V)]
    T2 = [t * scales[(i + 7) % 20] for i, t in enumerate(T)]
    assert k_reciprocal_sample(make_input(V2, T2, k)) == k_reciprocal_sample(make_input(V, T, k))


@given(st.integers(2, 20), st.integers(0, 10_000))
def test_duplicated_pools_k1_self_pairs(n, seed):
    E = np.random.default_rng(seed).normal(size=(n, 6))
    assert k_reciprocal_sample(make_input(E, E, 1)) == {i: {i} for i in range(n)}


def test_k_monotone_50_instances():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n_v, n_t = rng.integers(2, 40, size=2)
        d = int(rng.choice([2, 8, 16]))
        V, T = rng.normal(size=(n_v, d)), rng.normal(size=(n_t, d))
        k = int(rng.integers(1, 9))
        small = k_reciprocal_sample(make_input(V, T, k))
        large = k_reciprocal_sample(make_input(V, T, k + 1))
        assert all(small[v] <= large[v] for v in small)


def test_build_positive_pairs_examples():
    ids = {0: 1, 1: 2}
    assert build_positive_pairs(ids, ids) == [(0, 0, SAME_ID), (1, 1, SAME_ID)]
    assert (0, 1, SURROGATE) in build_positive_pairs(ids, ids, {0: {1}})
    assert build_positive_pairs(ids, ids, {0: {0}}) == [(0, 0, SAME_ID), (1, 1, SAME_ID)]


@given(st.dictionaries(st.integers(0, 8), st.integers(0, 3), min_size=1),
       st.dictionaries(st.integers(0, 8), st.integers(0, 3), min_size=1),
       st.dictionaries(st.integers(0, 8), st.sets(st.integers(0, 8))))
def test_build_positive_pairs_is_union_without_duplicates(v_ids, t_ids, surrogates):
    pairs = build_positive_pairs(v_ids, t_ids, surrogates)
    keys = [(v, t) for v, t, _ in pairs]
    assert len(keys) == len(set(keys)) and keys == sorted(keys)
    same = {(v, t) for v in v_ids for t in t_ids if v_ids[v] == t_ids[t]}
    sur = {(v, t) for v, ts in surrogates.items() for t in ts}
    assert set(keys) == same | sur
    for v, t, prov in pairs:
        assert prov == (SAME_ID if (v, t) in same else SURROGATE)
