from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dgsense.gf2m import FieldError, get_field
from dgsense.sieve import c1_offsets, find_nonorthogonal_pairs
from dgsense.weights import (
    CountingError,
    WeightDistribution,
    c1_count_macwilliams,
    c1_pairs_bruteforce,
    closed_form_c1_count,
    dg0_codewords,
    enumerate_dg0_weights,
    krawtchouk,
    macwilliams_count,
)


@given(st.integers(1, 40), st.data())
def test_krawtchouk_low_orders(N, data):
    z = data.draw(st.integers(0, N))
    assert krawtchouk(0, z, N) == 1
    assert krawtchouk(1, z, N) == N - 2 * z
    if N >= 2:
        assert krawtchouk(2, z, N) == ((N - 2 * z) ** 2 - N) // 2


@pytest.mark.parametrize("N", [4, 9, 16])
def test_krawtchouk_orthogonality(N):
    for a in range(N + 1):
        for b in range(N + 1):
            s = sum(comb(N, z) * krawtchouk(a, z, N) * krawtchouk(b, z, N) for z in range(N + 1))
            assert s == (2**N * comb(N, a) if a == b else 0)


def test_krawtchouk_domain():
    with pytest.raises(ValueError):
        krawtchouk(3, 5, 4)


@pytest.mark.parametrize("m", [5, 7, 9, 11])
def test_four_weights(m):
    dist = enumerate_dg0_weights(m, 1)
    half, dev = 1 << (m - 1), 1 << ((m - 1) // 2)
    assert dist.weights == [0, half - dev, half, half + dev]
    assert dist.counts[0] == 1
    assert dist.size == 1 << m
    t, t_prime = dist.counts[half - dev], dist.counts[half + dev]
    assert t - t_prime == m * dev


def test_m5_distribution_frozen():
    assert enumerate_dg0_weights(5, 1).counts == {0: 1, 12: 21, 16: 9, 20: 1}


@pytest.mark.parametrize("m", [3, 5, 7, 9])
def test_character_sum_dichotomy(m):
    # S = sum_x i^(x P x^T) = N - 2w; S^2 is 0 or 2^(m+1) for every nonzero form
    (T,) = dg0_codewords(m, 1)
    w = T.sum(axis=1).astype(np.int64)
    S2 = ((1 << m) - 2 * w[1:]) ** 2
    assert set(S2.tolist()) <= {0, 1 << (m + 1)}


@pytest.mark.parametrize("m,r", [(5, 1), (7, 1), (9, 1), (5, 2), (7, 2), (7, 3)])
def test_c1_count_three_ways(m, r):
    dist = enumerate_dg0_weights(m, r)
    mw = c1_count_macwilliams(dist, r)
    assert mw == len(c1_pairs_bruteforce(m, r))
    assert mw == len(c1_offsets(get_field(m), r)[0])


@pytest.mark.parametrize("m", [5, 7, 9, 11])
def test_closed_form(m):
    dist = enumerate_dg0_weights(m, 1)
    cf = closed_form_c1_count(m, dist)
    assert cf.c1 == c1_count_macwilliams(dist, 1)
    assert cf.c1 == (1 << m) - 1 - dist.counts[1 << (m - 1)]
    assert min(cf.s, cf.t, cf.t_prime) >= 0
    assert cf.c1 >= len(find_nonorthogonal_pairs(m, 1, verify=False).pairs)


def test_frozen_c1_counts():
    assert [c1_count_macwilliams(enumerate_dg0_weights(m, 1)) for m in (5, 7, 9, 11)] == [22, 70, 278, 1056]


@pytest.mark.parametrize("m,r", [(5, 1), (7, 1), (7, 2)])
def test_weight_one_dual_words(m, r):
    assert macwilliams_count(enumerate_dg0_weights(m, r), 1) == m + 1


def test_all_zero_code():
    N, size = 16, 64
    dist = WeightDistribution(N, {0: size})
    assert macwilliams_count(dist, 2) == N * (N - 1) // 2


def test_counting_errors():
    with pytest.raises(CountingError):
        macwilliams_count(WeightDistribution(8, {0: 1, 1: 2}), 2)
    dist = enumerate_dg0_weights(5, 1)
    with pytest.raises(CountingError):
        c1_count_macwilliams(dist, 2)
    with pytest.raises(CountingError):
        closed_form_c1_count(5, WeightDistribution(32, {0: 1, 12: 20, 16: 10, 20: 1}))
    with pytest.raises(FieldError):
        enumerate_dg0_weights(5, 3)
    with pytest.raises(ValueError):
        enumerate_dg0_weights(13, 2)


def test_cache(tmp_path):
    a = enumerate_dg0_weights(7, 1, cache_dir=tmp_path)
    assert list(tmp_path.iterdir())
    assert enumerate_dg0_weights(7, 1, cache_dir=tmp_path) == a
    assert WeightDistribution.from_dict(a.to_dict()) == a
