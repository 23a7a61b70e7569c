"""Graphs in compressed adjacency form, generators, and bond percolation."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .rng import PERCOLATION, RngStream, as_generator, as_stream, bernoulli_threshold

__all__ = [
    "Graph",
    "PercolationSample",
    "RetryCapExceeded",
    "generate_complete",
    "generate_complete_bipartite",
    "generate_hypercube",
    "generate_path",
    "generate_star",
    "generate_random_regular",
    "from_edges",
    "percolate",
    "is_connected",
    "dump_edge_list",
    "load_edge_list",
    "parse_graph_spec",
]

MAX_VERTICES = 1 << 31
PAIRING_RETRY_CAP = 10_000


class RetryCapExceeded(RuntimeError):
    """Rejection sampling did not produce a simple graph within the retry cap."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph.

    ``indptr``/``indices`` hold the adjacency in CSR form: the neighbours of
    ``v`` are ``indices[indptr[v]:indptr[v + 1]]``, sorted ascending.
    """

    vertex_count: int
    indptr: np.ndarray
    indices: np.ndarray
    name: str = ""
    regular_degree: int | None = field(init=False)

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int32)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        deg = np.diff(indptr)
        d = int(deg[0]) if deg.size and np.all(deg == deg[0]) else None
        object.__setattr__(self, "regular_degree", d)

    @property
    def n(self) -> int:
        return self.vertex_count

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return int(self.indices.shape[0] // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Undirected edges as ``(u, v)`` arrays with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int32), self.degrees)
        keep = src < self.indices
        eu = np.ascontiguousarray(src[keep])
        ev = np.ascontiguousarray(self.indices[keep])
        eu.setflags(write=False)
        ev.setflags(write=False)
        return eu, ev

    def edge_set(self) -> set[tuple[int, int]]:
        eu, ev = self.edges
        return set(zip(eu.tolist(), ev.tolist()))

    def check(self) -> None:
        """Assert simplicity and symmetry; raises ``ValueError`` on violation."""
        n = self.n
        if self.indptr.shape[0] != n + 1 or self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise ValueError("malformed CSR index pointer")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("neighbour id out of range")
        src = np.repeat(np.arange(n, dtype=np.int64), self.degrees)
        dst = self.indices.astype(np.int64)
        if np.any(src == dst):
            raise ValueError("self-loop present")
        same_row = src[1:] == src[:-1]
        if np.any(same_row & (dst[1:] <= dst[:-1])):
            raise ValueError("adjacency rows must be strictly increasing (duplicate edge?)")
        fwd = src * n + dst
        rev = np.sort(dst * n + src)
        if not np.array_equal(fwd, rev):
            raise ValueError("adjacency is not symmetric")


def from_edges(n: int, edges, name: str = "", check: bool = True) -> Graph:
    """Build a graph from an iterable of undirected ``(u, v)`` pairs."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"edge endpoint out of range for n={n}")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    keys = lo * n + hi
    if np.unique(keys).size != keys.size:
        raise ValueError("duplicate edges are not allowed")
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    perm = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    g = Graph(n, indptr, dst[perm], name=name)
    if check:
        g.check()
    return g


def generate_complete(n: int) -> Graph:
    if n < 1:
        raise ValueError(f"complete graph needs n >= 1, got {n}")
    if n > 1 << 16:
        raise ValueError(f"complete graph on {n} vertices is too large")
    indptr = np.arange(n + 1, dtype=np.int64) * (n - 1)
    full = np.tile(np.arange(n, dtype=np.int32), n).reshape(n, n)
    indices = full[~np.eye(n, dtype=bool)]
    g = Graph(n, indptr, indices, name=f"complete:{n}")
    g.check()
    return g


def generate_complete_bipartite(k: int) -> Graph:
    """``K_{k,k}``: sides ``0..k-1`` and ``k..2k-1``, ``k``-regular."""
    if k < 1:
        raise ValueError(f"bipartite side must be >= 1, got {k}")
    left = np.repeat(np.arange(k), k)
    right = np.tile(np.arange(k, 2 * k), k)
    g = from_edges(2 * k, np.stack([left, right], axis=1), name=f"bipartite:{k}")
    return g


def generate_hypercube(dim: int) -> Graph:
    if dim < 1:
        raise ValueError(f"hypercube dimension must be >= 1, got {dim}")
    if (1 << dim) > MAX_VERTICES or dim > 30:
        raise ValueError(f"hypercube dimension {dim} overflows the vertex id range")
    n = 1 << dim
    v = np.arange(n, dtype=np.int64)
    nbrs = np.sort(v[:, None] ^ (1 << np.arange(dim, dtype=np.int64))[None, :], axis=1)
    indptr = np.arange(n + 1, dtype=np.int64) * dim
    g = Graph(n, indptr, nbrs.ravel(), name=f"hypercube:{dim}")
    g.check()
    return g


def generate_path(n: int) -> Graph:
    if n < 1:
        raise ValueError(f"path needs n >= 1, got {n}")
    return from_edges(n, [(i, i + 1) for i in range(n - 1)], name=f"path:{n}")


def generate_star(leaves: int) -> Graph:
    if leaves < 1:
        raise ValueError(f"star needs at least one leaf, got {leaves}")
    return from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)], name=f"star:{leaves}")


def _pairing_attempt(n, d, gen):
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    gen.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    if np.any(lo == hi):
        return None
    keys = lo * n + hi
    if np.unique(keys).size != keys.size:
        return None
    return np.stack([lo, hi], axis=1)


def _steger_wormald_attempt(n, d, gen):
    # random stub pairing that only accepts pairs keeping the graph simple
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    while stubs.size:
        gen.shuffle(stubs)
        leftover = []
        for a, b in stubs.reshape(-1, 2).tolist():
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover.extend((a, b))
        if len(leftover) == stubs.size:
            # no progress; check whether any suitable pair remains at all
            pending = sorted(set(leftover))
            if not any((x, y) not in edges for i, x in enumerate(pending) for y in pending[i + 1:]):
                return None
        stubs = np.array(leftover, dtype=np.int64)
    return np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)


def generate_random_regular(n: int, d: int, rng, method: str = "auto",
                            max_tries: int = PAIRING_RETRY_CAP) -> Graph:
    """Random simple ``d``-regular graph on ``n`` vertices.

    ``method="pairing"`` is the configuration model with whole-sample
    rejection (exactly uniform).  Its acceptance rate is about
    ``exp(-(d*d - 1) / 4)``, hopeless beyond ``d ~ 5``, so ``"auto"`` switches
    to the Steger-Wormald pairing (asymptotically uniform) for larger ``d``.
    """
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    if (n * d) % 2:
        raise ValueError(f"n*d must be even, got n={n}, d={d}")
    if d >= n:
        raise ValueError(f"need d < n, got n={n}, d={d}")
    if method == "auto":
        method = "pairing" if (d * d - 1) / 4 <= math.log(100) else "steger-wormald"
    gen = as_generator(rng)
    attempt = {"pairing": _pairing_attempt, "steger-wormald": _steger_wormald_attempt}.get(method)
    if attempt is None:
        raise ValueError(f"unknown random regular method {method!r}")
    for _ in range(max_tries):
        edges = attempt(n, d, gen) if d else np.zeros((0, 2), dtype=np.int64)
        if edges is not None:
            return from_edges(n, edges, name=f"regular:{n}:{d}")
    raise RetryCapExceeded(f"{method} sampling for n={n}, d={d} failed {max_tries} times")


@dataclass(frozen=True, eq=False)
class PercolationSample:
    """Bond percolation of ``base``: edge ``i`` of ``base.edges`` kept iff ``mask[i]``."""

    base: Graph
    mask: np.ndarray
    p: float
    seed: RngStream

    @cached_property
    def graph(self) -> Graph:
        eu, ev = self.base.edges
        indptr, indices = kernels.backend.build_csr(self.base.n, eu, ev, self.mask)
        return Graph(self.base.n, indptr, indices, name=f"{self.base.name}@p={self.p}")

    @property
    def retained_count(self) -> int:
        return int(self.mask.sum())

    @property
    def retained_edges(self) -> set[tuple[int, int]]:
        eu, ev = self.base.edges
        keep = self.mask.astype(bool)
        return set(zip(eu[keep].tolist(), ev[keep].tolist()))


def percolate(g: Graph, p: float, rng, row: int = 0) -> PercolationSample:
    """Keep each undirected edge of ``g`` independently with probability ``p``.

    The draw for edge ``i`` depends only on the stream, ``row`` and ``i``, so
    the same stream always yields the same sample.
    """
    threshold = bernoulli_threshold(p)
    stream = as_stream(rng)
    eu, _ = g.edges
    mask = kernels.backend.percolate_mask(eu.shape[0], stream.key(PERCOLATION, row), threshold)
    mask.setflags(write=False)
    return PercolationSample(g, mask, float(p), stream)


def _csr(g_or_sample) -> Graph:
    return g_or_sample.graph if isinstance(g_or_sample, PercolationSample) else g_or_sample


def is_connected(g_or_sample) -> bool:
    g = _csr(g_or_sample)
    if g.n <= 1:
        return True
    return kernels.backend.component_size(g.indptr, g.indices, 0) == g.n


def dump_edge_list(g_or_sample, path) -> None:
    """Write ``"n m"`` then one ``"u v"`` line per edge (0-based ids)."""
    g = _csr(g_or_sample)
    eu, ev = g.edges
    lines = [f"{g.n} {eu.shape[0]}"]
    lines.extend(f"{u} {v}" for u, v in zip(eu.tolist(), ev.tolist()))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edge_list(path) -> Graph:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'n m'")
        n, m = int(header[0]), int(header[1])
        body = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.zeros((0, 2), dtype=np.int64)
    if body.shape != (m, 2):
        raise ValueError(f"{path}: expected {m} edge lines of 'u v', found {body.shape[0]}")
    return from_edges(n, body, name=os.path.basename(str(path)))


def parse_graph_spec(spec: str, seed: int = 0) -> Graph:
    """Build a graph from ``name:params``.

    Recognised: ``complete:N``, ``hypercube:DIM``, ``regular:N:D``,
    ``bipartite:K``, ``path:N``, ``star:LEAVES``.
    """
    name, _, rest = spec.partition(":")
    try:
        args = [int(a) for a in rest.split(":")] if rest else []
    except ValueError:
        raise ValueError(f"graph spec {spec!r}: parameters must be integers") from None
    makers = {
        "complete": (generate_complete, 1),
        "hypercube": (generate_hypercube, 1),
        "bipartite": (generate_complete_bipartite, 1),
        "path": (generate_path, 1),
        "star": (generate_star, 1),
    }
    if name == "regular":
        if len(args) != 2:
            raise ValueError(f"graph spec {spec!r}: expected regular:N:D")
        return generate_random_regular(args[0], args[1], RngStream(seed))
    if name not in makers:
        raise ValueError(f"unknown graph family {name!r} (expected one of complete, hypercube, "
                         "regular, bipartite, path, star)")
    fn, arity = makers[name]
    if len(args) != arity:
        raise ValueError(f"graph spec {spec!r}: expected {name}:<int>")
    return fn(*args)
