# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np

from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t draw(uint64_t key, uint64_t a, uint64_t b) noexcept nogil:
    return mix64(key ^ mix64(((a << 32) | b) + GOLDEN))


cdef inline int64_t bounded(uint64_t x, uint64_t bound) noexcept nogil:
    return <int64_t>(((x >> 32) * bound) >> 32)


cdef int64_t _push(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
                   uint64_t key, int64_t cap, int64_t[::1] ir, int64_t* order) noexcept nogil:
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t i, t, m, u, deg, w, count
    for i in range(n):
        ir[i] = -1
    ir[start] = 0
    order[0] = start
    count = 1
    if n == 1:
        return 0
    for t in range(1, cap + 1):
        m = count
        for i in range(m):
            u = order[i]
            deg = indptr[u + 1] - indptr[u]
            if deg == 0:
                continue
            w = indices[indptr[u] + bounded(draw(key, u, t - ir[u]), deg)]
            if ir[w] < 0:
                ir[w] = t
                order[count] = w
                count += 1
        if count == n:
            return t
    return -1


cdef int64_t _pwr(const int64_t[::1] indptr, int32_t[::1] work, int64_t start,
                  uint64_t key, int64_t cap, int64_t[::1] ir, int64_t* order) noexcept nogil:
    # ``work`` must hold a copy of the adjacency on entry and is restored on exit
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t i, t, m, u, deg, k, pos, j, w, count, last
    cdef int32_t tmp
    for i in range(n):
        ir[i] = -1
    ir[start] = 0
    order[0] = start
    count = 1
    if n == 1:
        return 0
    last = -1
    for t in range(1, cap + 1):
        m = count
        for i in range(m):
            u = order[i]
            deg = indptr[u + 1] - indptr[u]
            k = t - ir[u]
            if k > deg:
                continue
            pos = indptr[u] + k - 1
            j = pos + bounded(draw(key, u, k), deg - k + 1)
            tmp = work[pos]
            work[pos] = work[j]
            work[j] = tmp
            w = work[pos]
            if ir[w] < 0:
                ir[w] = t
                order[count] = w
                count += 1
        if count == n:
            last = t
            break
    if last < 0:
        t = cap
    else:
        t = last
    # undo the Fisher-Yates prefixes in reverse, recomputing each swap partner
    for i in range(count):
        u = order[i]
        deg = indptr[u + 1] - indptr[u]
        k = t - ir[u]
        if k > deg:
            k = deg
        while k >= 1:
            pos = indptr[u] + k - 1
            j = pos + bounded(draw(key, u, k), deg - k + 1)
            tmp = work[pos]
            work[pos] = work[j]
            work[j] = tmp
            k -= 1
    return last


cdef int64_t _ordered(const int64_t[::1] indptr, const int32_t[::1] ordering, int64_t start,
                      int64_t cap, int64_t[::1] ir, int64_t* order) noexcept nogil:
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t i, t, m, u, deg, k, w, count
    for i in range(n):
        ir[i] = -1
    ir[start] = 0
    order[0] = start
    count = 1
    if n == 1:
        return 0
    for t in range(1, cap + 1):
        m = count
        for i in range(m):
            u = order[i]
            deg = indptr[u + 1] - indptr[u]
            k = t - ir[u]
            if k > deg:
                continue
            w = ordering[indptr[u] + k - 1]
            if ir[w] < 0:
                ir[w] = t
                order[count] = w
                count += 1
        if count == n:
            return t
    return -1


cdef int64_t _component(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
                        uint8_t* seen, int64_t* queue) noexcept nogil:
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t i, head = 0, tail = 1, u, w
    for i in range(n):
        seen[i] = 0
    seen[start] = 1
    queue[0] = start
    while head < tail:
        u = queue[head]
        head += 1
        for i in range(indptr[u], indptr[u + 1]):
            w = indices[i]
            if not seen[w]:
                seen[w] = 1
                queue[tail] = w
                tail += 1
    return tail


cdef void _mask(int64_t m, uint64_t key, uint64_t threshold, uint8_t[::1] out) noexcept nogil:
    cdef int64_t e
    for e in range(m):
        out[e] = (draw(key, e, 0) >> 11) < threshold


cdef void _csr(int64_t n, const int32_t[::1] eu, const int32_t[::1] ev, const uint8_t[::1] mask,
               int64_t[::1] indptr, int32_t[::1] indices, int64_t* fill) noexcept nogil:
    cdef int64_t e, m = eu.shape[0], u, v
    for u in range(n + 1):
        indptr[u] = 0
    for e in range(m):
        if mask[e]:
            indptr[eu[e] + 1] += 1
            indptr[ev[e] + 1] += 1
    for u in range(n):
        indptr[u + 1] += indptr[u]
        fill[u] = indptr[u]
    # edges arrive sorted by (u, v) with u < v, which leaves every row sorted
    for e in range(m):
        if mask[e]:
            u = eu[e]
            v = ev[e]
            indices[fill[u]] = v
            fill[u] += 1
            indices[fill[v]] = u
            fill[v] += 1


def push_run(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
             uint64_t key, int64_t cap, int64_t[::1] informed_round):
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t res
    if order == NULL:
        raise MemoryError()
    with nogil:
        res = _push(indptr, indices, start, key, cap, informed_round, order)
    free(order)
    return res


def pwr_run(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
            uint64_t key, int64_t cap, int64_t[::1] informed_round):
    cdef int64_t n = indptr.shape[0] - 1
    cdef int32_t[::1] work = np.array(indices, dtype=np.int32, copy=True)
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t res
    if order == NULL:
        raise MemoryError()
    with nogil:
        res = _pwr(indptr, work, start, key, cap, informed_round, order)
    free(order)
    return res


def ordered_run(const int64_t[::1] indptr, const int32_t[::1] ordering, int64_t start,
                int64_t cap, int64_t[::1] informed_round):
    cdef int64_t n = indptr.shape[0] - 1
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t res
    if order == NULL:
        raise MemoryError()
    with nogil:
        res = _ordered(indptr, ordering, start, cap, informed_round, order)
    free(order)
    return res


def percolate_mask(int64_t m, uint64_t key, uint64_t threshold):
    out = np.empty(m, dtype=np.uint8)
    cdef uint8_t[::1] view = out
    with nogil:
        _mask(m, key, threshold, view)
    return out


def build_csr(int64_t n, const int32_t[::1] eu, const int32_t[::1] ev, const uint8_t[::1] mask):
    cdef int64_t e, kept = 0
    for e in range(eu.shape[0]):
        kept += mask[e]
    indptr = np.empty(n + 1, dtype=np.int64)
    indices = np.empty(2 * kept, dtype=np.int32)
    cdef int64_t[::1] ip = indptr
    cdef int32_t[::1] ix = indices
    cdef int64_t* fill = <int64_t*>malloc((n + 1) * sizeof(int64_t))
    if fill == NULL:
        raise MemoryError()
    with nogil:
        _csr(n, eu, ev, mask, ip, ix, fill)
    free(fill)
    return indptr, indices


def component_size(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start):
    cdef int64_t n = indptr.shape[0] - 1
    cdef uint8_t* seen = <uint8_t*>malloc(n)
    cdef int64_t* queue = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t res
    if seen == NULL or queue == NULL:
        free(seen)
        free(queue)
        raise MemoryError()
    with nogil:
        res = _component(indptr, indices, start, seen, queue)
    free(seen)
    free(queue)
    return res


def push_completion_batch(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
                          const uint64_t[::1] keys, int64_t cap):
    cdef int64_t n = indptr.shape[0] - 1, i, trials = keys.shape[0]
    out = np.empty(trials, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef int64_t[::1] ir = np.empty(n, dtype=np.int64)
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    if order == NULL:
        raise MemoryError()
    with nogil:
        for i in range(trials):
            res[i] = _push(indptr, indices, start, keys[i], cap, ir, order)
    free(order)
    return out


def pwr_completion_batch(const int64_t[::1] indptr, const int32_t[::1] indices, int64_t start,
                         const uint64_t[::1] keys, int64_t cap):
    cdef int64_t n = indptr.shape[0] - 1, i, trials = keys.shape[0]
    out = np.empty(trials, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef int64_t[::1] ir = np.empty(n, dtype=np.int64)
    cdef int32_t[::1] work = np.array(indices, dtype=np.int32, copy=True)
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    if order == NULL:
        raise MemoryError()
    with nogil:
        for i in range(trials):
            res[i] = _pwr(indptr, work, start, keys[i], cap, ir, order)
    free(order)
    return out


def percolated_completion_batch(int64_t n, const int32_t[::1] eu, const int32_t[::1] ev,
                                const uint64_t[::1] perc_keys, uint64_t threshold,
                                const uint64_t[::1] run_keys, int64_t start, int64_t cap,
                                int protocol):
    cdef int64_t m = eu.shape[0], i, trials = run_keys.shape[0]
    out = np.empty(trials, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef uint8_t[::1] mask = np.empty(m, dtype=np.uint8)
    cdef int64_t[::1] indptr = np.empty(n + 1, dtype=np.int64)
    cdef int32_t[::1] indices = np.empty(2 * m, dtype=np.int32)
    cdef int64_t[::1] ir = np.empty(n, dtype=np.int64)
    cdef int64_t* order = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int64_t* fill = <int64_t*>malloc((n + 1) * sizeof(int64_t))
    cdef uint8_t* seen = <uint8_t*>malloc(n)
    if order == NULL or fill == NULL or seen == NULL:
        free(order)
        free(fill)
        free(seen)
        raise MemoryError()
    with nogil:
        for i in range(trials):
            _mask(m, perc_keys[i], threshold, mask)
            _csr(n, eu, ev, mask, indptr, indices, fill)
            if _component(indptr, indices, start, seen, order) < n:
                res[i] = -2
            elif protocol == 0:
                res[i] = _push(indptr, indices, start, run_keys[i], cap, ir, order)
            else:
                res[i] = _pwr(indptr, indices, start, run_keys[i], cap, ir, order)
    free(order)
    free(fill)
    free(seen)
    return out
