import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    influx_by_enumeration,
    ordered_draws,
    unique_draws_by_enumeration,
    wallenius_by_enumeration,
)
from urtlt.combinatorics import (
    Pmf,
    binomial_pmf,
    convolve,
    convolve_many,
    hypergeom_pmf,
    log_binom,
    multinomial_pmf,
    ripple_influx_pmf,
    unique_draws_pmf,
    wallenius_multi_pmf,
    wallenius_pmf,
)
from urtlt.degree import robust_soliton


def test_log_binom_cases():
    assert log_binom(5, 2) == pytest.approx(math.log(10))
    assert log_binom(4, -1) == -math.inf
    assert log_binom(0, 0) == 0.0
    assert log_binom(200, 100) == pytest.approx(math.log(math.comb(200, 100)), rel=1e-12)


def test_hypergeom_examples():
    assert hypergeom_pmf(1, 5, 2, 2) == pytest.approx(0.6)
    assert hypergeom_pmf(0, 10, 0, 3) == 1.0
    hits = sum(1 for s in itertools.combinations(range(6), 3) if sum(x < 4 for x in s) == 2)
    assert hypergeom_pmf(2, 6, 4, 3) == pytest.approx(hits / math.comb(6, 3), abs=1e-15)


def test_binomial_examples():
    assert binomial_pmf(0, 7, 0.0) == 1.0
    assert binomial_pmf(3, 3, 1.0) == 1.0
    assert binomial_pmf(1, 2, 0.9) == pytest.approx(0.18)


def test_multinomial_examples():
    assert multinomial_pmf([6], 6, [1.0]) == 1.0
    assert multinomial_pmf([1, 1], 2, [0.5, 0.5]) == pytest.approx(0.5)
    counts = [3, 3, 1, 2, 0, 0, 1, 0, 0, 0]
    probs = robust_soliton(10, 0.1, 1).probs
    coef = math.factorial(10) / math.prod(math.factorial(c) for c in counts)
    direct = coef * math.prod(p**c for p, c in zip(probs, counts))
    assert multinomial_pmf(counts, 10, probs) == pytest.approx(direct, rel=1e-12)
    rng = np.random.default_rng(3)
    draws = rng.multinomial(10, probs, size=200_000)
    freq = np.mean(np.all(draws == counts, axis=1))
    se = math.sqrt(direct * (1 - direct) / 200_000)
    assert abs(freq - direct) < 4 * se


def test_wallenius_examples():
    assert wallenius_pmf(1, 2, 2, 3, 1.0) == pytest.approx(0.6)
    assert wallenius_pmf(1, 1, 1, 1, 9.0) == pytest.approx(0.9)
    assert wallenius_pmf(2, 3, 3, 3, 4.0) == pytest.approx(wallenius_by_enumeration(2, 3, 3, 3, 4.0), abs=1e-14)


def test_wallenius_matches_ordered_draws():
    for m1, m2, beta in [(3, 2, 2.5), (2, 4, 9.0), (4, 4, 0.3), (3, 3, 0.0)]:
        for i in range(m1 + m2 + 1):
            for j in range(i + 1):
                assert wallenius_pmf(j, i, m1, m2, beta) == pytest.approx(
                    wallenius_by_enumeration(j, i, m1, m2, beta), abs=1e-13
                )


def test_wallenius_multi_three_classes():
    sizes, betas = (2, 2, 2), (4.0, 2.0, 1.0)
    w = [b for b, m in zip(betas, sizes) for _ in range(m)]
    layer = [n for n, m in enumerate(sizes) for _ in range(m)]
    oracle: dict = {}
    for seq, p in ordered_draws(w, 3):
        key = tuple(sum(1 for x in seq if layer[x] == n) for n in range(3))
        oracle[key] = oracle.get(key, 0.0) + p
    total = 0.0
    for j in itertools.product(range(3), repeat=3):
        if sum(j) != 3:
            continue
        v = wallenius_multi_pmf(j, 3, sizes, betas)
        total += v
        assert v == pytest.approx(oracle.get(j, 0.0), abs=1e-14)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_wallenius_multi_two_classes_consistent():
    for m1, m2 in itertools.product(range(7), repeat=2):
        for i in range(min(6, m1 + m2) + 1):
            for j in range(i + 1):
                assert wallenius_multi_pmf((j, i - j), i, (m1, m2), (3.0, 1.0)) == pytest.approx(
                    wallenius_pmf(j, i, m1, m2, 3.0), abs=1e-13
                )


def test_wallenius_multi_central_and_merged():
    sizes = (3, 2, 4)
    for j in itertools.product(range(4), repeat=3):
        i = sum(j)
        if i > 5:
            continue
        central = math.prod(math.comb(m, x) for m, x in zip(sizes, j)) / math.comb(9, i)
        assert wallenius_multi_pmf(j, i, sizes, (1.0, 1.0, 1.0)) == pytest.approx(central, abs=1e-13)
    for i in range(6):
        for j0 in range(min(i, 3) + 1):
            merged = sum(
                wallenius_multi_pmf((j0, x, i - j0 - x), i, sizes, (5.0, 1.0, 1.0)) for x in range(i - j0 + 1)
            )
            assert merged == pytest.approx(wallenius_pmf(j0, i, 3, 6, 5.0), abs=1e-13)


def test_unique_draws_examples():
    assert unique_draws_pmf(1, 2, 3) == pytest.approx(1 / 3)
    assert unique_draws_pmf(2, 2, 3) == pytest.approx(2 / 3)
    assert unique_draws_pmf(0, 0, 5) == 1.0


def test_ripple_influx_examples():
    assert ripple_influx_pmf(1, 1, 2, 0) == 1.0
    for added in range(4):
        assert ripple_influx_pmf(added, 3, 4, 4) == (1.0 if added == 0 else 0.0)
    assert ripple_influx_pmf(1, 2, 3, 1) == pytest.approx(float(influx_by_enumeration(1, 2, 3, 1)))


def test_unique_draws_sampling():
    rng = np.random.default_rng(11)
    for ell in (2, 4, 6):
        for m in (1, 4, 8):
            draws = rng.integers(ell, size=(100_000, m))
            distinct = np.array([len(set(r)) for r in draws.tolist()])
            freq = np.bincount(distinct, minlength=m + 1) / len(distinct)
            pmf = np.array([unique_draws_pmf(q, m, ell) for q in range(m + 1)])
            assert 0.5 * np.abs(freq - pmf).sum() < 0.01


def test_influx_support():
    for ell in range(1, 7):
        for r in range(ell + 1):
            for m in range(9):
                for added in range(m + 1):
                    if added > min(m, ell - r):
                        assert ripple_influx_pmf(added, m, ell, r) == 0.0


def test_convolve_examples():
    x = Pmf(1, (0.2, 0.3, 0.5))
    assert convolve(Pmf.point(0), x) == x
    assert convolve(Pmf(0, (0.5, 0.5)), Pmf(0, (0.5, 0.5))).mass == pytest.approx((0.25, 0.5, 0.25))
    parts = [(2, 0.3), (3, 0.6), (1, 0.9)]
    got = convolve_many(Pmf.binomial(n, p) for n, p in parts)
    oracle = np.zeros(7)
    for a, b, c in itertools.product(range(3), range(4), range(2)):
        oracle[a + b + c] += binomial_pmf(a, 2, 0.3) * binomial_pmf(b, 3, 0.6) * binomial_pmf(c, 1, 0.9)
    assert np.allclose(got.mass, oracle, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    m1=st.integers(0, 8),
    m2=st.integers(0, 8),
    beta=st.floats(0.0, 40.0, allow_nan=False),
    data=st.data(),
)
def test_wallenius_normalizes(m1, m2, beta, data):
    i = data.draw(st.integers(0, m1 + m2))
    total = sum(wallenius_pmf(j, i, m1, m2, beta) for j in range(i + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(m=st.integers(0, 12), ell=st.integers(1, 12), data=st.data())
def test_influx_normalizes(m, ell, data):
    r = data.draw(st.integers(0, ell))
    total = sum(ripple_influx_pmf(x, m, ell, r) for x in range(m + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("ell", range(1, 5))
def test_unique_and_influx_exact_small(ell):
    for m in range(6):
        for q in range(m + 1):
            assert unique_draws_pmf(q, m, ell) == pytest.approx(float(unique_draws_by_enumeration(q, m, ell)), abs=1e-15)
        for r in range(ell + 1):
            for added in range(m + 1):
                want = influx_by_enumeration(added, m, ell, r)
                assert Fraction(ripple_influx_pmf(added, m, ell, r)).limit_denominator(10**7) == want
