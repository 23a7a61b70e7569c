"""Pure-Python (numpy) kernels.

Same signatures and bit-identical results as the compiled ``_ckernels``
module.  Each round is vectorised over the informed set, which is valid
because a round's outcome does not depend on the order in which informed
vertices act.

Completion codes: ``>= 0`` completion round, ``-1`` censored at the cap,
``-2`` (batch percolation only) percolated graph disconnected.
"""
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .rng import bounded, draw_array

BACKEND = "python"


def _prepare(indptr, start, informed_round):
    n = indptr.shape[0] - 1
    informed_round[:] = -1
    informed_round[start] = 0
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    return n, order


def push_run(indptr, indices, start, key, cap, informed_round):
    n, order = _prepare(indptr, start, informed_round)
    if n == 1:
        return 0
    deg = np.diff(indptr)
    count = 1
    for t in range(1, cap + 1):
        act = order[:count]
        act = act[deg[act] > 0]
        if act.size:
            x = draw_array(key, act, t - informed_round[act])
            w = indices[indptr[act] + bounded(x, deg[act]).astype(np.int64)]
            new = np.unique(w[informed_round[w] < 0])
            informed_round[new] = t
            order[count:count + new.size] = new
            count += new.size
        if count == n:
            return t
    return -1


def pwr_run(indptr, indices, start, key, cap, informed_round):
    n, order = _prepare(indptr, start, informed_round)
    if n == 1:
        return 0
    deg = np.diff(indptr)
    work = np.array(indices, copy=True)
    count = 1
    for t in range(1, cap + 1):
        act = order[:count]
        k = t - informed_round[act]
        keep = k <= deg[act]
        act, k = act[keep], k[keep]
        if act.size:
            # one Fisher-Yates step per active row; rows are disjoint
            pos = indptr[act] + k - 1
            span = deg[act] - k + 1
            j = pos + bounded(draw_array(key, act, k), span).astype(np.int64)
            a = work[pos]
            w = work[j]
            work[j] = a
            work[pos] = w
            new = np.unique(w[informed_round[w] < 0])
            informed_round[new] = t
            order[count:count + new.size] = new
            count += new.size
        if count == n:
            return t
    return -1


def ordered_run(indptr, ordering, start, cap, informed_round):
    n, order = _prepare(indptr, start, informed_round)
    if n == 1:
        return 0
    deg = np.diff(indptr)
    count = 1
    for t in range(1, cap + 1):
        act = order[:count]
        k = t - informed_round[act]
        keep = k <= deg[act]
        act, k = act[keep], k[keep]
        if act.size:
            w = ordering[indptr[act] + k - 1]
            new = np.unique(w[informed_round[w] < 0])
            informed_round[new] = t
            order[count:count + new.size] = new
            count += new.size
        if count == n:
            return t
    return -1


def percolate_mask(m, key, threshold):
    if m == 0:
        return np.zeros(0, dtype=np.uint8)
    x = draw_array(key, np.arange(m, dtype=np.uint64), 0)
    return ((x >> np.uint64(11)) < np.uint64(threshold)).astype(np.uint8)


def build_csr(n, eu, ev, mask):
    keep = mask.astype(bool)
    u = eu[keep].astype(np.int64)
    v = ev[keep].astype(np.int64)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    perm = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[perm].astype(np.int32)


def component_size(indptr, indices, start):
    n = indptr.shape[0] - 1
    if indptr[n] == 0:
        return 1
    mat = csr_matrix((np.ones(indices.shape[0], dtype=np.int8), indices, indptr), shape=(n, n))
    return int(breadth_first_order(mat, start, directed=False, return_predecessors=False).size)


def push_completion_batch(indptr, indices, start, keys, cap):
    ir = np.empty(indptr.shape[0] - 1, dtype=np.int64)
    return np.array([push_run(indptr, indices, start, int(k), cap, ir) for k in keys], dtype=np.int64)


def pwr_completion_batch(indptr, indices, start, keys, cap):
    ir = np.empty(indptr.shape[0] - 1, dtype=np.int64)
    return np.array([pwr_run(indptr, indices, start, int(k), cap, ir) for k in keys], dtype=np.int64)


def percolated_completion_batch(n, eu, ev, perc_keys, threshold, run_keys, start, cap, protocol):
    run = push_run if protocol == 0 else pwr_run
    ir = np.empty(n, dtype=np.int64)
    out = np.empty(len(run_keys), dtype=np.int64)
    for i, (pk, rk) in enumerate(zip(perc_keys, run_keys)):
        indptr, indices = build_csr(n, eu, ev, percolate_mask(eu.shape[0], int(pk), threshold))
        if component_size(indptr, indices, start) < n:
            out[i] = -2
        else:
            out[i] = run(indptr, indices, start, int(rk), cap, ir)
    return out
