import numpy as np
import pytest
from scipy import stats as sps

from rumorperc.rng import (
    MASK64, RngStream, bernoulli_threshold, bounded, draw, draw_array, mix64, mix64_array,
    percolation_row,
)


def test_scalar_and_array_draws_agree():
    key = RngStream(3).key(1)
    a = np.arange(50)
    b = np.arange(50)[::-1]
    arr = draw_array(key, a, b)
    assert [int(x) for x in arr] == [draw(key, int(x), int(y)) for x, y in zip(a, b)]
    z = np.array([0, 1, 2**63, MASK64], dtype=np.uint64)
    assert [int(x) for x in mix64_array(z)] == [mix64(int(x)) for x in z]


def test_counter_draws_are_distinct():
    key = RngStream(0).key(2)
    vals = draw_array(key, np.repeat(np.arange(100), 100), np.tile(np.arange(100), 100))
    assert np.unique(vals).size == vals.size


def test_bounded_is_uniform():
    key = RngStream(9).key(1)
    x = draw_array(key, np.arange(60_000), 0)
    b = bounded(x, 7)
    assert b.min() >= 0 and b.max() < 7
    assert bounded(draw(key, 5, 0), 7) == int(b[5])
    assert sps.chisquare(np.bincount(b.astype(np.int64), minlength=7)).pvalue > 1e-3


def test_bernoulli_threshold_edges():
    assert bernoulli_threshold(0.0) == 0
    assert bernoulli_threshold(1.0) == 1 << 53
    x = draw_array(RngStream(1).key(3), np.arange(100_000), 0)
    assert np.all((x >> np.uint64(11)) < np.uint64(bernoulli_threshold(1.0)))
    frac = float(((x >> np.uint64(11)) < np.uint64(bernoulli_threshold(0.3))).mean())
    assert abs(frac - 0.3) < 0.006
    with pytest.raises(ValueError):
        bernoulli_threshold(1.5)


def test_stream_keys_are_stable_and_separated():
    s = RngStream(42, 3)
    assert s.key(1) == RngStream(42, 3).key(1)
    assert len({s.key(1), s.key(2), s.key(1, 0), s.substream(0).key(1), RngStream(42, 4).key(1)}) == 5
    g1, g2 = s.generator(), RngStream(42, 3).generator()
    assert np.array_equal(g1.random(5), g2.random(5))
    assert percolation_row(0.5) == percolation_row(0.5)


def test_stream_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(1, -2)
