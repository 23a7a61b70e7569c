"""Couplings between push, PWR, and PWR on a percolated graph.

Three constructions live here:

* push <-> PWR on the same graph.  Both read the same per-vertex choice
  sequence ``theta[u][1], theta[u][2], ...``; push uses it directly and PWR
  uses its distinct values in order of first appearance.  Along every path
  the PWR informed set contains the push informed set.
* per-edge indicators ``A_e``, ``I'``, ``I^p = A I'`` and ``I <= I^p``, with
  the pair ``(I(u->v), I(v->u))`` obtained from ``(I^p(u->v), I^p(v->u))``
  by an explicit monotone transport.
* orderings ``Ord_u`` of ``Gamma(u)`` and ``Ord^p_u`` of ``Gamma_p(u)``
  that put the chosen sets first and keep the relative order of
  ``N_u`` inside ``Ord^p_u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .graph_core import Graph
from .protocols import ProtocolTrace, default_round_cap, run_ordered, run_push, trace_from_rounds
from .rng import COUPLING, PUSH, as_generator, as_stream, bounded, draw_array

__all__ = [
    "DistinctPickSequence",
    "sample_distinct_pick_sequence",
    "sample_distinct_pick_batch",
    "run_coupled_push_pwr",
    "containment_holds",
    "PairTransport",
    "sample_pair_coupling",
    "EdgeIndicatorCoupling",
    "build_edge_coupling",
    "Orderings",
    "conditioned_orderings",
    "CoupledPwrRun",
    "run_coupled_pwr",
    "sample_conditioned_ranks",
    "coupled_run_report",
]


# --------------------------------------------------------------------------
# push <-> PWR via shared choice sequences


@dataclass(frozen=True)
class DistinctPickSequence:
    """First appearances in an i.i.d. uniform sequence over ``range(degree)``.

    ``permutation[k]`` is the ``k+1``-th distinct value; ``gaps[k]`` is the
    number of draws between its appearance and the previous one
    (``gaps[0] == 1``).
    """

    degree: int
    permutation: tuple[int, ...]
    gaps: tuple[int, ...]

    @property
    def first_times(self) -> tuple[int, ...]:
        return tuple(np.cumsum(self.gaps).tolist())


def sample_distinct_pick_sequence(s: int, k_needed: int, rng) -> DistinctPickSequence:
    if not 0 <= k_needed <= s:
        raise ValueError(f"need 0 <= k_needed <= s, got k_needed={k_needed}, s={s}")
    gen = as_generator(rng)
    seen: set[int] = set()
    perm: list[int] = []
    gaps: list[int] = []
    m = last = 0
    while len(perm) < k_needed:
        m += 1
        x = int(gen.integers(s))
        if x not in seen:
            seen.add(x)
            perm.append(x)
            gaps.append(m - last)
            last = m
    return DistinctPickSequence(s, tuple(perm), tuple(gaps))


def sample_distinct_pick_batch(s: int, k_needed: int, rng, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`sample_distinct_pick_sequence`; returns
    ``(permutations, gaps)`` arrays of shape ``(size, k_needed)``."""
    if not 0 <= k_needed <= s:
        raise ValueError(f"need 0 <= k_needed <= s, got k_needed={k_needed}, s={s}")
    gen = as_generator(rng)
    perms = np.zeros((size, k_needed), dtype=np.int64)
    times = np.zeros((size, k_needed), dtype=np.int64)
    seen = np.zeros((size, s), dtype=bool)
    found = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    m = 0
    while active.size and k_needed:
        m += 1
        x = gen.integers(s, size=active.size)
        new = ~seen[active, x]
        rows = active[new]
        seen[rows, x[new]] = True
        perms[rows, found[rows]] = x[new]
        times[rows, found[rows]] = m
        found[rows] += 1
        active = active[found[active] < k_needed]
    gaps = np.diff(times, axis=1, prepend=0)
    return perms, gaps


class _ThetaSource:
    # lazily materialised theta[u][m] = bounded(draw(key, u, m), deg u), m >= 1
    CHUNK = 32

    def __init__(self, g: Graph, key: int):
        self.g = g
        self.key = key
        self.cache: dict[int, np.ndarray] = {}

    def upto(self, u: int, m: int) -> np.ndarray:
        have = self.cache.get(u)
        if have is None or have.size < m:
            size = max(m, (0 if have is None else have.size) + self.CHUNK)
            draws = draw_array(self.key, np.full(size, u), np.arange(1, size + 1))
            have = bounded(draws, self.g.degree(u)).astype(np.int64)
            self.cache[u] = have
        return have


def _distinct_from_theta(theta: _ThetaSource, u: int, k: int, state: dict) -> int:
    # k-th distinct neighbour index of u in first-appearance order
    seq, seen, pos = state.setdefault(u, ([], set(), 0))
    while len(seq) < k:
        block = theta.upto(u, pos + 1)
        x = int(block[pos])
        pos += 1
        if x not in seen:
            seen.add(x)
            seq.append(x)
    state[u] = (seq, seen, pos)
    return seq[k - 1]


def run_coupled_push_pwr(g: Graph, start: int, rng, round_cap: int | None = None
                         ) -> tuple[ProtocolTrace, ProtocolTrace]:
    """Run push and PWR from ``start`` on one shared set of choice sequences.

    The push trace equals ``run_push(g, start, rng)``; the PWR trace is a
    PWR run whose orderings are the distinct-value sequences.
    """
    stream = as_stream(rng)
    cap = default_round_cap(g.n) if round_cap is None else round_cap
    push = run_push(g, start, stream, cap)
    if g.n > 1 and g.degree(start) == 0:
        return push, ProtocolTrace(start, g.n, [(start,)], None, 0)
    theta = _ThetaSource(g, stream.key(PUSH))
    ir = np.full(g.n, -1, dtype=np.int64)
    ir[start] = 0
    informed = [start]
    state: dict = {}
    result = 0 if g.n == 1 else -1
    for t in range(1, cap + 1):
        if result == 0:
            break
        new = []
        for u in informed:
            k = t - int(ir[u])
            deg = g.degree(u)
            if k > deg:
                continue
            w = int(g.indices[g.indptr[u] + _distinct_from_theta(theta, u, k, state)])
            if ir[w] < 0:
                ir[w] = t
                new.append(w)
        informed.extend(new)
        if len(informed) == g.n:
            result = t
            break
    return push, trace_from_rounds(start, ir, result, cap)


def containment_holds(inner: ProtocolTrace, outer: ProtocolTrace) -> bool:
    """True iff every vertex is informed in ``outer`` no later than in ``inner``,
    i.e. ``inner``'s informed set is contained in ``outer``'s at every round."""
    a = inner.informed_round()
    b = outer.informed_round()
    a_inf = np.where(a < 0, np.iinfo(np.int64).max, a)
    b_inf = np.where(b < 0, np.iinfo(np.int64).max, b)
    return bool(np.all(b_inf <= a_inf))


# --------------------------------------------------------------------------
# monotone transport for one edge's pair of indicators


@dataclass(frozen=True)
class PairTransport:
    """Coupling of ``Be(q) x Be(q)`` below the law of ``(A B1', A B2')``.

    With ``A ~ Be(p)``, ``B' ~ Be(r)`` the upper law has masses
    ``m11 = p r^2``, ``m10 = m01 = p r (1 - r)``; the lower one
    ``n11 = q^2``, ``n10 = n01 = q (1 - q)``.  Mass is moved greedily along
    ``(0,0) < (0,1), (1,0) < (1,1)``: ``(1,1)`` keeps ``n11``, each single
    outcome keeps ``a = min(n10, m10)``, the shortfall ``n10 - a`` of each
    is taken symmetrically from the spare ``(1,1)`` mass, and everything
    left drops to ``(0,0)``.  This is feasible iff ``q^2 <= p r^2`` and
    ``1 - (1 - q)^2 <= p r (2 - r)``.
    """

    p: float
    r: float
    q: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if not 0 < self.r < 1:
            raise ValueError(f"r = CT/(pd) must be in (0, 1), got {self.r}")
        if not 0 <= self.q <= 1:
            raise ValueError(f"q must be in [0, 1], got {self.q}")
        tol = 1e-15
        if self.q ** 2 > self.p * self.r ** 2 + tol:
            raise ValueError(f"infeasible transport: q^2 = {self.q ** 2} > p r^2 = {self.p * self.r ** 2}")
        if 1 - (1 - self.q) ** 2 > self.p * self.r * (2 - self.r) + tol:
            raise ValueError("infeasible transport: 1 - (1 - q)^2 > p r (2 - r)")

    @classmethod
    def from_params(cls, p: float, r: float) -> "PairTransport":
        return cls(p, r, p * r * (1 - r / 2))

    @property
    def upper_masses(self) -> dict[tuple[int, int], float]:
        p, r = self.p, self.r
        m11 = p * r * r
        m10 = p * r * (1 - r)
        return {(1, 1): m11, (1, 0): m10, (0, 1): m10, (0, 0): 1 - m11 - 2 * m10}

    @property
    def lower_masses(self) -> dict[tuple[int, int], float]:
        q = self.q
        return {(1, 1): q * q, (1, 0): q * (1 - q), (0, 1): q * (1 - q), (0, 0): (1 - q) ** 2}

    @cached_property
    def plan(self) -> dict[tuple[tuple[int, int], tuple[int, int]], float]:
        """Joint masses ``{(upper outcome, lower outcome): mass}``."""
        mu, nu = self.upper_masses, self.lower_masses
        a = min(nu[(1, 0)], mu[(1, 0)])
        short = nu[(1, 0)] - a
        spare = mu[(1, 1)] - nu[(1, 1)]
        return {
            ((0, 0), (0, 0)): mu[(0, 0)],
            ((1, 0), (1, 0)): a,
            ((1, 0), (0, 0)): mu[(1, 0)] - a,
            ((0, 1), (0, 1)): a,
            ((0, 1), (0, 0)): mu[(0, 1)] - a,
            ((1, 1), (1, 1)): nu[(1, 1)],
            ((1, 1), (1, 0)): short,
            ((1, 1), (0, 1)): short,
            ((1, 1), (0, 0)): spare - 2 * short,
        }

    def lower_given_upper(self, up1: np.ndarray, up2: np.ndarray, u: np.ndarray):
        """Draw the lower pair given upper outcomes and uniforms ``u``."""
        mu = self.upper_masses
        plan = self.plan
        keep_single = plan[((1, 0), (1, 0))] / mu[(1, 0)] if mu[(1, 0)] > 0 else 0.0
        c11 = plan[((1, 1), (1, 1))] / mu[(1, 1)]
        c10 = c11 + plan[((1, 1), (1, 0))] / mu[(1, 1)]
        c01 = c10 + plan[((1, 1), (0, 1))] / mu[(1, 1)]
        both = up1 & up2
        only1 = up1 & ~up2
        only2 = up2 & ~up1
        low1 = (only1 & (u < keep_single)) | (both & ((u < c11) | ((u >= c11) & (u < c10))))
        low2 = (only2 & (u < keep_single)) | (both & ((u < c11) | ((u >= c10) & (u < c01))))
        return low1, low2


def sample_pair_coupling(p: float, r: float, rng, size=None):
    """Sample ``((I1, I2), (I1p, I2p))`` with ``I <= I^p`` coordinatewise.

    ``(I1p, I2p) = (A B1', A B2')`` and ``I1, I2`` are independent ``Be(q)``
    with ``q = p r (1 - r / 2)``.
    """
    t = PairTransport.from_params(p, r)
    gen = as_generator(rng)
    shape = (1,) if size is None else ((size,) if np.ndim(size) == 0 else tuple(size))
    a = gen.random(shape) < p
    b = gen.random((2,) + shape) < r
    up1 = a & b[0]
    up2 = a & b[1]
    low1, low2 = t.lower_given_upper(up1, up2, gen.random(shape))
    if size is None:
        return (int(low1[0]), int(low2[0])), (int(up1[0]), int(up2[0]))
    return (low1, low2), (up1, up2)


# --------------------------------------------------------------------------
# edge-indicator coupling on a regular graph


def _arc_index(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    # CSR slot (u, w) -> (edge index, direction); direction 0 means u < w
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    dst = g.indices.astype(np.int64)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    eu, ev = g.edges
    keys = eu.astype(np.int64) * g.n + ev
    edge = np.searchsorted(keys, lo * g.n + hi)
    return edge, (src > dst).astype(np.int64)


@dataclass(frozen=True, eq=False)
class EdgeIndicatorCoupling:
    """Indicators for every edge of a ``d``-regular graph.

    Arrays indexed by edge follow ``graph.edges``; the second axis of the
    directed arrays is ``0`` for ``u -> v`` (``u < v``) and ``1`` for
    ``v -> u``.
    """

    graph: Graph
    p: float
    T_budget: int
    C_value: float
    delta: float
    r: float
    q: float
    A: np.ndarray
    Iprime: np.ndarray
    Ip: np.ndarray
    I: np.ndarray
    _arcs: tuple = field(repr=False)

    @property
    def d(self) -> int:
        return self.graph.regular_degree

    @property
    def q_statement(self) -> float:
        """The smaller binomial parameter ``CT/d (1 - CT/(pd))``, kept for comparison with :attr:`q`."""
        return self.p * self.r * (1 - self.r)

    @cached_property
    def _arc_I(self) -> np.ndarray:
        edge, direction = self._arcs
        return self.I[edge, direction]

    @cached_property
    def _arc_Ip(self) -> np.ndarray:
        edge, direction = self._arcs
        return self.Ip[edge, direction]

    def _row_counts(self, arc_values) -> np.ndarray:
        src = np.repeat(np.arange(self.graph.n), self.graph.degrees)
        return np.bincount(src, weights=arc_values, minlength=self.graph.n).astype(np.int64)

    @cached_property
    def N(self) -> np.ndarray:
        return self._row_counts(self._arc_I)

    @cached_property
    def Np(self) -> np.ndarray:
        return self._row_counts(self._arc_Ip)

    @property
    def Nstar(self) -> np.ndarray:
        return self.Np - self.N

    def _row(self, arr, u):
        lo, hi = self.graph.indptr[u], self.graph.indptr[u + 1]
        return self.graph.indices[lo:hi][arr[lo:hi]]

    def chosen(self, u: int) -> np.ndarray:
        """The set ``N_u``: neighbours ``v`` with ``I(u -> v) = 1``."""
        return self._row(self._arc_I, u)

    def chosen_p(self, u: int) -> np.ndarray:
        """The set ``N^p_u``: neighbours ``v`` with ``I^p(u -> v) = 1``."""
        return self._row(self._arc_Ip, u)

    @cached_property
    def percolated(self) -> Graph:
        eu, ev = self.graph.edges
        indptr, indices = kernels.backend.build_csr(self.graph.n, eu, ev, self.A.astype(np.uint8))
        return Graph(self.graph.n, indptr, indices, name=f"{self.graph.name}@coupled-p={self.p}")

    def thresholds(self) -> dict[str, bool]:
        CT = self.C_value * self.T_budget
        return {
            "N_above_CT_half": bool(np.all(self.N > CT / 2)),
            "Np_above_CT_half": bool(np.all(self.Np > CT / 2)),
            "N_above_T": bool(np.all(self.N > self.T_budget)),
            "excess_below_delta_N": bool(np.all(self.Nstar <= self.delta * self.N)),
        }


def coupling_parameters(d: int, p: float, T: int) -> dict[str, float]:
    C = math.sqrt(p * d / T)
    CT = C * T
    r = CT / (p * d)
    return {
        "C": C,
        "CT": CT,
        "r": r,
        "CT_over_d": CT / d,
        "delta": max(C ** -0.5, math.sqrt(r)),
        "q": (CT / d) * (1 - CT / (2 * p * d)),
    }


def build_edge_coupling(g: Graph, p: float, T: int, rng) -> EdgeIndicatorCoupling:
    """Draw ``A_e``, ``I'``, ``I^p = A I'`` and the transported ``I <= I^p``."""
    d = g.regular_degree
    if d is None or d == 0:
        raise ValueError("edge coupling needs a regular graph with positive degree")
    if not 0 < p <= 1:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    par = coupling_parameters(d, p, T)
    if not par["r"] < 1:
        raise ValueError(f"regime violated: CT/(pd) = {par['r']:.4g} must be < 1 (need T < pd)")
    if not par["CT_over_d"] <= 1:
        raise ValueError(f"regime violated: CT/d = {par['CT_over_d']:.4g} must be <= 1")
    transport = PairTransport(p, par["r"], par["q"])
    gen = as_generator(rng)
    m = g.edge_count
    A = gen.random(m) < p
    Iprime = gen.random((m, 2)) < par["r"]
    Ip = Iprime & A[:, None]
    low1, low2 = transport.lower_given_upper(Ip[:, 0], Ip[:, 1], gen.random(m))
    I = np.stack([low1, low2], axis=1)
    for arr in (A, Iprime, Ip, I):
        arr.setflags(write=False)
    return EdgeIndicatorCoupling(g, p, T, par["C"], par["delta"], par["r"], par["q"],
                                 A, Iprime, Ip, I, _arc_index(g))


# --------------------------------------------------------------------------
# conditioned orderings and coupled PWR runs


@dataclass(frozen=True, eq=False)
class Orderings:
    """``order_g`` is laid out like ``graph.indices`` (row ``u`` is ``Ord_u``);
    ``order_gp`` like ``gp.indices`` (row ``u`` is ``Ord^p_u``)."""

    graph: Graph
    gp: Graph
    order_g: np.ndarray
    order_gp: np.ndarray

    def ord_u(self, u: int) -> np.ndarray:
        return self.order_g[self.graph.indptr[u]:self.graph.indptr[u + 1]]

    def ord_p(self, u: int) -> np.ndarray:
        return self.order_gp[self.gp.indptr[u]:self.gp.indptr[u + 1]]


def conditioned_orderings(c: EdgeIndicatorCoupling, rng) -> Orderings:
    """``Ord_u``: ``N_u`` shuffled, then the rest of ``Gamma(u)`` shuffled.
    ``Ord^p_u``: ``N^p_u`` first, with ``N_u`` on a uniform subset of its
    slots in ``Ord_u`` order and the extra elements shuffled into the other
    slots, then the rest of ``Gamma_p(u)`` shuffled."""
    gen = as_generator(rng)
    g, gp = c.graph, c.percolated
    order_g = np.empty_like(g.indices)
    order_gp = np.empty_like(gp.indices)
    for u in range(g.n):
        nbrs = g.neighbors(u)
        chosen = c.chosen(u)
        chosen_p = c.chosen_p(u)
        rest = np.setdiff1d(nbrs, chosen, assume_unique=True)
        first = gen.permutation(chosen)
        order_g[g.indptr[u]:g.indptr[u + 1]] = np.concatenate([first, gen.permutation(rest)])

        l, m = chosen_p.size, chosen.size
        head = np.empty(l, dtype=g.indices.dtype)
        slots = np.zeros(l, dtype=bool)
        slots[gen.choice(l, size=m, replace=False)] = True
        head[slots] = first
        head[~slots] = gen.permutation(np.setdiff1d(chosen_p, chosen, assume_unique=True))
        tail = gen.permutation(np.setdiff1d(gp.neighbors(u), chosen_p, assume_unique=True))
        order_gp[gp.indptr[u]:gp.indptr[u + 1]] = np.concatenate([head, tail])
    return Orderings(g, gp, order_g, order_gp)


def orderings_consistent(c: EdgeIndicatorCoupling, o: Orderings) -> bool:
    """Relative order of ``N_u`` agrees in both orderings and each element
    moves back by at most ``N*_u`` positions."""
    for u in range(c.graph.n):
        m = int(c.N[u])
        base = o.ord_u(u)[:m]
        ordp = o.ord_p(u)
        pos_p = {int(w): i for i, w in enumerate(ordp)}
        ranks = [pos_p.get(int(w), -1) for w in base]
        if any(r < 0 for r in ranks) or any(b <= a for a, b in zip(ranks, ranks[1:])):
            return False
        excess = np.array(ranks) - np.arange(m)
        if np.any(excess < 0) or np.any(excess > c.Nstar[u]):
            return False
    return True


@dataclass
class CoupledPwrRun:
    trace_g: ProtocolTrace
    trace_gp: ProtocolTrace
    orderings: Orderings
    ordering_ok: bool
    coupling_failure: bool
    thresholds: dict[str, bool]


def run_coupled_pwr(g: Graph, coupling: EdgeIndicatorCoupling, start: int, rng,
                    round_cap: int | None = None) -> CoupledPwrRun:
    """PWR on ``g`` with ``Ord_u`` and on ``G_p`` with ``Ord^p_u``.

    ``coupling_failure`` is set when PWR on ``g`` needed to go past ``N_u``
    at some vertex before finishing, the situation the path argument excludes.
    """
    if coupling.graph is not g:
        raise ValueError("coupling was built on a different graph")
    cap = default_round_cap(g.n) if round_cap is None else round_cap
    o = conditioned_orderings(coupling, rng)
    tg = run_ordered(g, o.order_g, start, cap)
    tgp = run_ordered(o.gp, o.order_gp, start, cap)
    ir = tg.informed_round()
    last = tg.completion_round if tg.completion_round is not None else cap
    used = np.where(ir >= 0, np.minimum(g.degrees, last - ir), 0)
    failure = bool(np.any(used > coupling.N))
    return CoupledPwrRun(tg, tgp, o, orderings_consistent(coupling, o), failure, coupling.thresholds())


def sample_conditioned_ranks(coupling: EdgeIndicatorCoupling, orderings: Orderings,
                             vertices, rng) -> np.ndarray:
    """For each vertex ``u`` with ``N_u >= 1`` pick a uniform rank ``j`` in
    ``Ord_u`` among ``N_u`` and report ``(N^p_u, N_u, j, rank in Ord^p_u)``
    (1-based ranks)."""
    gen = as_generator(rng)
    rows = []
    for u in vertices:
        m = int(coupling.N[u])
        if m == 0:
            continue
        j = int(gen.integers(1, m + 1))
        w = orderings.ord_u(u)[j - 1]
        rank_p = int(np.flatnonzero(orderings.ord_p(u) == w)[0]) + 1
        rows.append((int(coupling.Np[u]), m, j, rank_p))
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def coupled_run_report(g: Graph, p: float, T: int, runs: int, seed: int, start: int = 0,
                       round_cap: int | None = None) -> dict:
    """Both couplings for ``runs`` independent trials, one JSON-ready record each."""
    from .rng import RngStream

    cap = default_round_cap(g.n) if round_cap is None else round_cap
    par = coupling_parameters(g.regular_degree or 0, p, T) if g.regular_degree else None
    records = []
    for i in range(runs):
        stream = RngStream(seed, i)
        push, pwr = run_coupled_push_pwr(g, start, stream, cap)
        c = build_edge_coupling(g, p, T, stream.substream(COUPLING))
        cr = run_coupled_pwr(g, c, start, stream.substream(COUPLING + 1), cap)
        records.append({
            "run": i,
            "containment_ok": containment_holds(push, pwr),
            "ordering_ok": cr.ordering_ok,
            "coupling_failure": cr.coupling_failure,
            "censored": any(t.censored for t in (push, pwr, cr.trace_g, cr.trace_gp)),
            "thresholds": cr.thresholds,
            "completion": {
                "push": push.completion_round,
                "pwr": pwr.completion_round,
                "pwr_g": cr.trace_g.completion_round,
                "pwr_gp": cr.trace_gp.completion_round,
            },
        })
    return {
        "graph": g.name,
        "n": g.n,
        "p": p,
        "T": T,
        "seed": seed,
        "round_cap": cap,
        "parameters": par,
        "runs": records,
    }
