import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from rumorperc.stats import chisquare_gof
from rumorperc.stochastic import (
    DiscreteCdf, NhParams, check_dominance, convolve, exact_cdf_geom_sum, exact_cdf_nh,
    geom_sum_tail_bound, nh_mean, nh_pmf, sample_geometric, sample_nh, tail_bound_delta,
)


def enumerate_nh(N, d, r):
    """Brute-force law: every placement of the d successes is equally likely."""
    counts = {}
    total = 0
    for pos in itertools.combinations(range(1, N + 1), d):
        counts[pos[r - 1]] = counts.get(pos[r - 1], 0) + 1
        total += 1
    return {k: Fraction(c, total) for k, c in counts.items()}


@pytest.mark.parametrize("N,d,r", [(5, 2, 1), (6, 3, 2), (8, 3, 3), (9, 4, 2), (7, 7, 4), (10, 1, 1)])
def test_nh_pmf_matches_enumeration(N, d, r):
    law = enumerate_nh(N, d, r)
    params = NhParams(N, d, r)
    assert set(law) == set(params.support)
    for k, prob in law.items():
        assert nh_pmf(params, k) == pytest.approx(float(prob), abs=1e-15)
    table = exact_cdf_nh(params, exact=True)
    assert table.pmf() == [law[k] for k in params.support]
    assert nh_mean(params) == sum(k * p for k, p in law.items())


def test_nh_large_population_branch():
    params = NhParams(1500, 40, 7)
    for k in (7, 100, 260, 900):
        exact = Fraction(math.comb(k - 1, 6) * math.comb(1500 - k, 33), math.comb(1500, 40))
        assert nh_pmf(params, k) == pytest.approx(float(exact), rel=1e-9)


def test_nh_validation():
    with pytest.raises(ValueError):
        NhParams(5, 6, 1)
    with pytest.raises(ValueError):
        NhParams(5, 2, 3)
    assert nh_pmf(NhParams(5, 2, 1), 9) == 0.0


def test_sample_nh_fits_pmf():
    params = NhParams(30, 5, 2)
    x = sample_nh(params, 4, size=50_000)
    support = list(params.support)
    probs = np.array([nh_pmf(params, k) for k in support])
    obs = np.bincount(x - support[0], minlength=len(support))
    assert chisquare_gof(obs, probs / probs.sum()).pvalue > 1e-3
    assert isinstance(sample_nh(params, 1), int)


@pytest.mark.parametrize("j,p", [(1, Fraction(1, 3)), (3, Fraction(2, 5)), (5, Fraction(1, 7))])
def test_geom_sum_is_negative_binomial(j, p):
    table = exact_cdf_geom_sum(j, p, 40)
    for k, prob in zip(range(j, 41), table.pmf()):
        assert prob == math.comb(k - 1, j - 1) * p ** j * (1 - p) ** (k - j)
    assert table.tail_mass_bound == table.survival_at(41)
    ftable = exact_cdf_geom_sum(j, float(p), 40)
    ref = sps.nbinom.sf(np.arange(j, 42) - j - 1, j, float(p))
    assert np.allclose(ftable.survival, ref, atol=1e-12)


def test_convolve_matches_brute_force():
    a = exact_cdf_nh(NhParams(6, 2, 1), exact=True)
    b = exact_cdf_nh(NhParams(5, 3, 2), exact=True)
    s = convolve(a, b)
    pa = dict(zip(range(a.support_start, a.last_known), a.pmf()))
    pb = dict(zip(range(b.support_start, b.last_known), b.pmf()))
    brute = {}
    for (x, px), (y, py) in itertools.product(pa.items(), pb.items()):
        brute[x + y] = brute.get(x + y, 0) + px * py
    assert dict(zip(range(s.support_start, s.last_known), s.pmf())) == brute
    with pytest.raises(ValueError):
        convolve(a, exact_cdf_geom_sum(1, Fraction(1, 2), 5))


def test_check_dominance_orders_geometrics():
    fast = exact_cdf_geom_sum(1, Fraction(1, 2), 20)
    slow = exact_cdf_geom_sum(1, Fraction(1, 4), 20)
    assert check_dominance(fast, slow).holds
    assert check_dominance(fast, fast).holds
    res = check_dominance(slow, fast)
    assert not res.holds and res.first_violation == 2


def test_check_dominance_truncated_upper_uses_tail_bound():
    # point mass at 30 is not dominated by a geometric truncated at 5
    point = DiscreteCdf(30, (Fraction(1), Fraction(0)))
    geo = exact_cdf_geom_sum(1, Fraction(1, 2), 5)
    assert not check_dominance(point, geo).holds
    assert check_dominance(DiscreteCdf(1, (Fraction(1), Fraction(0))), geo).holds


def test_tail_bound_constants():
    for eps in (0.1, 0.5, 1.0, 3.0):
        for C in (1.1, 2.0, 5.0):
            delta = tail_bound_delta(eps, C)
            assert delta * math.exp(C / eps) <= math.sqrt(delta) + 1e-15
            assert math.sqrt(delta) <= 0.5
    assert geom_sum_tail_bound(10, 2.0) == pytest.approx(math.exp(-10))
    with pytest.raises(ValueError):
        tail_bound_delta(0.5, 1.0)


def test_sample_geometric_support():
    x = sample_geometric(0.3, 1, size=10_000)
    assert x.min() >= 1
    assert abs(x.mean() - 1 / 0.3) < 0.1


nh_params = st.integers(1, 40).flatmap(
    lambda N: st.integers(1, N).flatmap(lambda d: st.tuples(st.just(N), st.just(d), st.integers(1, d))))


@given(nh_params)
def test_nh_pmf_sums_to_one(params):
    p = NhParams(*params)
    assert sum(nh_pmf(p, k) for k in p.support) == pytest.approx(1.0, abs=1e-12)
    table = exact_cdf_nh(p, exact=True)
    assert all(b <= a for a, b in zip(table.survival, table.survival[1:]))
    assert table.survival[-1] == 0


@given(st.integers(1, 25), st.integers(1, 25))
def test_first_success_dominated_by_geometric(k1, k2):
    nh = exact_cdf_nh(NhParams(k1 + k2, k1, 1), exact=True)
    assert check_dominance(nh, exact_cdf_geom_sum(1, Fraction(k1, k1 + k2), k2 + 2)).holds


@given(nh_params)
def test_nh_mean_formula(params):
    p = NhParams(*params)
    table = exact_cdf_nh(p, exact=True)
    assert sum(k * w for k, w in zip(p.support, table.pmf())) == nh_mean(p)
