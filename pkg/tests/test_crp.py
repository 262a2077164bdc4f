import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import special, stats

from mbtree.crp import (
    CrpState,
    OrderedCrpState,
    crp_limit_moment,
    crp_mean_tables,
    crp_step,
    gem_sticks,
    mittag_leffler_moment,
    mittag_leffler_sample,
    mittag_leffler_samples,
    ordered_crp_step,
    regenerative_composition,
    simulate_table_counts,
    stable_sample,
    stable_samples,
)
from mbtree.laws import DecrementMatrix, eppf_pd
from mbtree.numerics import compositions, integer_partitions, ks_test, set_partition_count
from mbtree.streams import RngStream

from conftest import within_4_sigma


def seat(state, n, rng, step):
    while state.n < n:
        state = step(state, rng)
    return state


def test_first_customer_weights():
    a, th = 0.3, 0.9
    w = CrpState(a, th).seat_weights()
    assert w == pytest.approx([1 - a, th + a])
    assert sum(w) == pytest.approx(1 + th)


def test_alpha_one_opens_tables():
    s = seat(CrpState(1.0, 0.5), 25, RngStream(1), crp_step)
    assert s.sizes == (1,) * 25


def test_domain():
    with pytest.raises(ValueError):
        CrpState(0.5, -0.6)
    with pytest.raises(ValueError):
        OrderedCrpState(0.5, -0.1)


def test_block_sizes_match_eppf():
    a, th = 0.5, 0.5
    runs = 100_000
    rng = RngStream(17)
    counts = Counter(tuple(sorted(seat(CrpState(a, th), 4, rng, crp_step).sizes, reverse=True)) for _ in range(runs))
    probs = {
        p: set_partition_count(p) * eppf_pd(Fraction(1, 2), Fraction(1, 2), p) for p in integer_partitions(4)
    }
    assert not within_4_sigma(counts, probs, runs)


def test_second_table_goes_right():
    a, th = 0.4, 0.7
    rng = RngStream(23)
    runs = 20_000
    right = 0
    for _ in range(runs):
        s = OrderedCrpState(a, th, (5,))
        while len(s.sizes) == 1:
            s = ordered_crp_step(s, rng)
        right += s.sizes[0] > 1
    p = th / (a + th)
    assert abs(right - runs * p) <= 4 * math.sqrt(runs * p * (1 - p))


def test_ordered_composition_law():
    a, th = 0.5, 0.5
    dec = DecrementMatrix(Fraction(1, 2), Fraction(1, 2))
    probs = {c: dec.composition_prob(c) for c in compositions(5)}
    assert sum(probs.values()) == 1
    runs = 60_000
    rng = RngStream(29)
    counts = Counter(seat(OrderedCrpState(a, th), 5, rng, ordered_crp_step).sizes for _ in range(runs))
    assert not within_4_sigma(counts, probs, runs)
    counts = Counter(regenerative_composition(DecrementMatrix(a, th), 5, rng) for _ in range(runs))
    assert not within_4_sigma(counts, probs, runs)


def test_regenerative_examples():
    dec = DecrementMatrix(0.3, 0.4)
    assert regenerative_composition(dec, 1, RngStream(0)) == (1,)
    runs = 40_000
    rng = RngStream(31)
    whole = sum(regenerative_composition(dec, 6, rng) == (6,) for _ in range(runs))
    p = dec(6, 6)
    assert abs(whole - runs * p) <= 4 * math.sqrt(runs * p * (1 - p))


def test_ordered_and_unordered_multisets_agree():
    a, th = 0.5, 0.5
    runs = 10_000
    rng = RngStream(37)
    plain = Counter(tuple(sorted(seat(CrpState(a, th), 6, rng, crp_step).sizes)) for _ in range(runs))
    ordered = Counter(tuple(sorted(seat(OrderedCrpState(a, th), 6, rng, ordered_crp_step).sizes)) for _ in range(runs))
    keys = sorted(set(plain) | set(ordered))
    table = np.array([[plain[k] for k in keys], [ordered[k] for k in keys]])
    table = table[:, table.sum(axis=0) >= 10]
    assert stats.chi2_contingency(table)[1] > 1e-3


def test_gem_sticks():
    rng = RngStream(41)
    a, th = 0.3, 0.5
    draws = np.array([gem_sticks(a, th, 5, rng) for _ in range(20_000)])
    assert np.all(draws.sum(axis=1) < 1)
    # E[P_i] = E[W_i] prod_{j<i} E[1 - W_j]
    means = []
    keep = 1.0
    for i in range(1, 6):
        m = (1 - a) / (1 + th + (i - 1) * a)
        means.append(keep * m)
        keep *= 1 - m
    se = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - means) <= 4 * se)
    assert means[0] == pytest.approx((1 - a) / (1 + th))
    uniform = np.array([gem_sticks(0.0, 1.0, 1, rng)[0] for _ in range(2000)])
    assert ks_test(uniform, lambda x: np.clip(x, 0, 1))[1] > 1e-3


def test_stable_laplace_transform():
    g = np.random.default_rng(43)
    for index in (0.3, 0.5, 0.8):
        s = stable_samples(index, 1_000_000, g)
        assert np.all(s > 0)
        for lam in (1.0, 2.0):
            x = np.exp(-lam * s)
            se = x.std(ddof=1) / math.sqrt(len(x))
            assert abs(x.mean() - math.exp(-(lam**index))) <= 4 * se


def test_stable_half_is_inverse_gamma():
    # index 1/2: sigma_1 = 1/(4G) with G ~ gamma(1/2)
    s = stable_samples(0.5, 5000, np.random.default_rng(47))
    _, p = ks_test(s, lambda x: special.gammaincc(0.5, 1 / (4 * np.asarray(x))))
    assert p > 1e-3


def test_scalar_samplers():
    rng = RngStream(53)
    assert stable_sample(0.6, rng) > 0
    assert mittag_leffler_sample(0.6, rng) > 0
    with pytest.raises(ValueError):
        stable_sample(1.0, rng)


def test_mittag_leffler_moments():
    assert mittag_leffler_moment(0.4, 0) == 1
    assert mittag_leffler_moment(0.5, 1) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    g = np.random.default_rng(59)
    for index in (0.3, 0.5, 0.7):
        m = mittag_leffler_samples(index, 1_000_000, g)
        for p in (1, 2):
            x = m**p
            se = x.std(ddof=1) / math.sqrt(len(x))
            assert abs(x.mean() - mittag_leffler_moment(index, p)) <= 4 * se


@pytest.mark.parametrize("alpha, theta", [(0.5, 0.5), (0.3, 1.2), (0.8, 0.1)])
def test_limit_moment_two_routes(alpha, theta):
    """Gamma-ratio form against the tilted Mittag-Leffler moment ratio."""
    r = theta / alpha
    for p in (1, 2, 0.5):
        ratio = mittag_leffler_moment(alpha, r + p) / mittag_leffler_moment(alpha, r)
        assert crp_limit_moment(alpha, theta, p) == pytest.approx(ratio, rel=1e-12)
    assert crp_limit_moment(alpha, theta, 1) == pytest.approx(
        math.gamma(theta + 1) / (alpha * math.gamma(theta + alpha)), rel=1e-12
    )


def test_half_half_limit_mean():
    assert crp_limit_moment(0.5, 0.5, 1) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("alpha, theta", [(0.5, 0.5), (0.2, 2.0)])
def test_mean_tables_recursion(alpha, theta):
    # E K_{m+1} = E K_m + (theta + alpha E K_m) / (m + theta)
    k = 1.0
    for m in range(1, 10_000):
        k += (theta + alpha * k) / (m + theta)
    assert crp_mean_tables(alpha, theta, 10_000) == pytest.approx(k, rel=1e-10)
    assert crp_mean_tables(alpha, theta, 1) == pytest.approx(1.0)


def test_table_counts_against_exact_mean():
    g = np.random.default_rng(61)
    k = simulate_table_counts(0.5, 0.5, 500, 4000, g)
    se = k.std(ddof=1) / math.sqrt(len(k))
    assert abs(k.mean() - crp_mean_tables(0.5, 0.5, 500)) <= 4 * se
    assert k.min() >= 1
