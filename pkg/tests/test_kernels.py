import numpy as np
import pytest

from rumorperc import kernels
from rumorperc.graph_core import generate_complete, generate_hypercube, generate_path, generate_random_regular
from rumorperc.rng import RngStream, bernoulli_threshold

needs_both = pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled kernels not built")

GRAPHS = [generate_complete(40), generate_hypercube(5), generate_path(12),
          generate_random_regular(60, 3, 5)]


def _keys(seed, n):
    return np.array([RngStream(seed, i).key(1) for i in range(n)], dtype=np.uint64)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    assert kernels.get_backend("python").BACKEND == "python"


@needs_both
@pytest.mark.parametrize("g", GRAPHS, ids=lambda g: g.name)
def test_backends_bit_identical(g):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    keys = _keys(4, 30)
    for fn in ("push_completion_batch", "pwr_completion_batch"):
        a = getattr(py, fn)(g.indptr, g.indices, 0, keys, 200)
        b = getattr(cy, fn)(g.indptr, g.indices, 0, keys, 200)
        assert np.array_equal(a, b), fn
    for fn in ("push_run", "pwr_run"):
        ir_a = np.empty(g.n, dtype=np.int64)
        ir_b = np.empty(g.n, dtype=np.int64)
        ra = getattr(py, fn)(g.indptr, g.indices, 1, int(keys[0]), 200, ir_a)
        rb = getattr(cy, fn)(g.indptr, g.indices, 1, int(keys[0]), 200, ir_b)
        assert ra == rb and np.array_equal(ir_a, ir_b), fn
    eu, ev = g.edges
    thr = bernoulli_threshold(0.6)
    ma = py.percolate_mask(eu.shape[0], int(keys[1]), thr)
    mb = cy.percolate_mask(eu.shape[0], int(keys[1]), thr)
    assert np.array_equal(ma, mb)
    pa, ia = py.build_csr(g.n, eu, ev, ma)
    pb, ib = cy.build_csr(g.n, eu, ev, mb)
    assert np.array_equal(pa, pb) and np.array_equal(ia, ib)
    assert py.component_size(pa, ia, 0) == cy.component_size(pb, ib, 0)
    pk = _keys(8, 30)
    for proto in (0, 1):
        a = py.percolated_completion_batch(g.n, eu, ev, pk, thr, keys, 0, 200, proto)
        b = cy.percolated_completion_batch(g.n, eu, ev, pk, thr, keys, 0, 200, proto)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("name", kernels.available_backends())
def test_pwr_batch_leaves_graph_untouched(name):
    # the compiled PWR kernel permutes adjacency in place and must restore it
    be = kernels.get_backend(name)
    g = generate_complete(30)
    before = g.indices.copy()
    be.pwr_completion_batch(g.indptr, g.indices, 0, _keys(1, 20), 100)
    assert np.array_equal(before, g.indices)
