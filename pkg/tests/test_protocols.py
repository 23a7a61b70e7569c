import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rumorperc.graph_core import (
    from_edges, generate_complete, generate_hypercube, generate_path, generate_random_regular,
    generate_star, percolate,
)
from rumorperc.protocols import ProtocolTrace, default_round_cap, run_ordered, run_push, run_pwr
from rumorperc.rng import RngStream
from rumorperc.stats import chisquare_gof, dkw_band, empirical_survival


def assert_valid_trace(g, t):
    seen = set()
    for r, verts in enumerate(t.rounds):
        assert not seen & set(verts)
        if r == 0:
            assert verts == (t.start_vertex,)
        for v in verts:
            if r:
                # every newly informed vertex has an informed neighbour
                assert seen & set(g.neighbors(v).tolist())
        seen |= set(verts)
    if not t.censored:
        assert len(seen) == g.n and t.rounds[-1]


@pytest.mark.parametrize("run", [run_push, run_pwr])
def test_two_vertices_take_one_round(run):
    for s in range(20):
        assert run(generate_complete(2), 0, s).completion_round == 1


def test_pwr_on_path_and_star():
    for s in range(30):
        # each interior vertex spends one or two rounds before passing the rumour on
        t = run_pwr(generate_path(6), 0, s)
        gaps = np.diff(t.informed_round())
        assert gaps[0] == 1 and set(gaps[1:]) <= {1, 2}
    assert run_pwr(generate_star(5), 0, 1).completion_round == 5
    for s in range(30):
        assert run_pwr(generate_star(5), 3, s).completion_round in (5, 6)


def test_push_informed_set_at_most_doubles():
    g = generate_complete(64)
    for s in range(30):
        sizes = [len(x) for x in run_push(g, 0, s).informed_sets()]
        assert all(b <= 2 * a for a, b in zip(sizes, sizes[1:]))


@pytest.mark.parametrize("g", [generate_hypercube(5), generate_random_regular(50, 4, 3), generate_path(7)],
                         ids=lambda g: g.name)
def test_traces_are_consistent(g):
    for s in range(10):
        for run in (run_push, run_pwr):
            assert_valid_trace(g, run(g, 0, s))


def test_recorded_choices_match_kernel():
    g = generate_random_regular(40, 5, 1)
    for s in range(10):
        a = run_push(g, 2, RngStream(s))
        b = run_push(g, 2, RngStream(s), record_choices=True)
        assert a.rounds == b.rounds and a.completion_round == b.completion_round
        first = b.per_edge_first_choice
        assert all(w in g.neighbors(u) for u, w in first)
        # the earliest choice made into each vertex is when it became informed
        ir = b.informed_round()
        for v in range(g.n):
            if v != 2:
                assert ir[v] == min(t for (u, w), t in first.items() if w == v)


def test_pwr_contacts_each_neighbour_once():
    g = generate_hypercube(3)
    t = run_pwr(g, 0, 5)
    # a vertex informed at round s has told every neighbour by round s + deg
    ir = t.informed_round()
    for v in range(g.n):
        for w in g.neighbors(v):
            assert ir[w] <= ir[v] + g.degree(v)


def test_censoring_and_isolated_start():
    g = from_edges(4, [(0, 1), (2, 3)])
    t = run_push(g, 0, 1, round_cap=10)
    assert t.censored and t.censored_at == 10 and t.completion_round is None
    iso = run_pwr(from_edges(3, [(1, 2)]), 0, 1)
    assert iso.censored_at == 0
    single = run_push(generate_complete(1), 0, 1)
    assert single.completion_round == 0
    with pytest.raises(ValueError):
        run_push(g, 7, 1)


def test_percolation_sample_accepted():
    s = percolate(generate_complete(20), 1.0, 2)
    assert run_push(s, 0, 3).rounds == run_push(generate_complete(20), 0, 3).rounds


def test_trace_json_round_trip():
    t = run_pwr(generate_hypercube(4), 3, 9)
    back = ProtocolTrace.from_json(t.to_json())
    assert back.rounds == t.rounds and back.completion_round == t.completion_round


def test_run_ordered_follows_orderings():
    g = generate_star(3)
    order = g.indices.copy()
    order[0:3] = [3, 1, 2]
    t = run_ordered(g, order, 0)
    assert t.rounds == [(0,), (3,), (1,), (2,)]


def test_default_round_cap():
    assert default_round_cap(1) == 1
    assert default_round_cap(512) == 122


def test_pwr_order_is_uniform():
    g = generate_star(3)
    perms = list(itertools.permutations((1, 2, 3)))
    counts = np.zeros(6)
    for s in range(6000):
        t = run_pwr(g, 0, RngStream(77, s))
        counts[perms.index(tuple(v for r in t.rounds[1:] for v in r))] += 1
    assert chisquare_gof(counts, np.full(6, 1 / 6)).pvalue > 1e-3


def test_push_choice_is_uniform():
    g = generate_star(5)
    first = [run_push(g, 0, RngStream(3, s)).rounds[1][0] for s in range(5000)]
    counts = np.bincount(first, minlength=6)[1:]
    assert chisquare_gof(counts, np.full(5, 0.2)).pvalue > 1e-3


def test_pwr_dominated_by_push():
    # each PWR choice is new, so PWR runtime is stochastically smaller
    g = generate_complete(32)
    n = 3000
    push = [run_push(g, 0, RngStream(1, i)).completion_round for i in range(n)]
    pwr = [run_pwr(g, 0, RngStream(2, i)).completion_round for i in range(n)]
    ks = np.arange(1, 40)
    slack = 2 * dkw_band(n, 1e-3)
    assert np.all(empirical_survival(pwr, ks) <= empirical_survival(push, ks) + slack)


@given(st.integers(2, 30), st.integers(0, 2**31))
def test_seed_determinism(n, seed):
    g = generate_complete(n)
    assert run_push(g, 0, seed).rounds == run_push(g, 0, seed).rounds
    assert run_pwr(g, n - 1, seed).rounds == run_pwr(g, n - 1, seed).rounds
