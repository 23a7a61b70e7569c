"""Synchronous push and push-without-replacement (PWR) runs.

Round ``t`` works on the informed set at the end of round ``t - 1``: every
such vertex makes one choice and the newly reached vertices join the set
afterwards.  A vertex informed at round ``s`` makes its ``k``-th choice at
round ``s + k``; the start vertex is informed at round 0.

The ``k``-th push choice of ``u`` is the neighbour with index
``bounded(draw(key, u, k), deg(u))``.  PWR instead advances a lazy
Fisher-Yates shuffle of ``u``'s neighbour list by one step per round and
stops after ``deg(u)`` choices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph_core import Graph, PercolationSample
from .rng import PUSH, PWR, as_stream, bounded, draw

__all__ = ["ProtocolTrace", "default_round_cap", "run_push", "run_pwr", "run_ordered", "trace_from_rounds"]


def default_round_cap(n: int) -> int:
    if n <= 1:
        return 1
    return math.ceil(8 * (math.log2(n) + math.log(n)))


@dataclass
class ProtocolTrace:
    """Round-by-round record of one run.

    ``rounds[t]`` lists the vertices first informed at round ``t``
    (``rounds[0] == (start,)``).  Exactly one of ``completion_round`` and
    ``censored_at`` is set.
    """

    start_vertex: int
    n: int
    rounds: list[tuple[int, ...]]
    completion_round: int | None
    censored_at: int | None
    per_edge_first_choice: dict[tuple[int, int], int] | None = field(default=None, repr=False)

    @property
    def censored(self) -> bool:
        return self.completion_round is None

    def informed_round(self) -> np.ndarray:
        """Round at which each vertex was informed, ``-1`` if never."""
        out = np.full(self.n, -1, dtype=np.int64)
        for t, verts in enumerate(self.rounds):
            out[list(verts)] = t
        return out

    def informed_sets(self):
        """Yield the cumulative informed set after each round."""
        acc: set[int] = set()
        for verts in self.rounds:
            acc.update(verts)
            yield frozenset(acc)

    def to_json(self) -> str:
        return json.dumps({
            "start": self.start_vertex,
            "n": self.n,
            "rounds": [list(r) for r in self.rounds],
            "completion_round": self.completion_round,
            "censored_at": self.censored_at,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolTrace":
        obj = json.loads(text)
        return cls(obj["start"], obj["n"], [tuple(r) for r in obj["rounds"]],
                   obj["completion_round"], obj["censored_at"])


def trace_from_rounds(start: int, informed_round: np.ndarray, completion: int, cap: int,
                      last_round: int | None = None) -> ProtocolTrace:
    n = informed_round.shape[0]
    if completion >= 0:
        last = completion
    else:
        last = cap if last_round is None else last_round
    rounds: list[tuple[int, ...]] = [() for _ in range(last + 1)]
    order = np.argsort(informed_round, kind="stable")
    ir_sorted = informed_round[order]
    for t in range(last + 1):
        lo, hi = np.searchsorted(ir_sorted, [t, t + 1])
        rounds[t] = tuple(order[lo:hi].tolist())
    if completion >= 0:
        return ProtocolTrace(start, n, rounds, completion, None)
    return ProtocolTrace(start, n, rounds, None, last)


def _graph(g) -> Graph:
    return g.graph if isinstance(g, PercolationSample) else g


def _check_start(g: Graph, start: int, cap: int | None) -> int:
    if not 0 <= start < g.n:
        raise ValueError(f"start vertex {start} out of range for n={g.n}")
    cap = default_round_cap(g.n) if cap is None else cap
    if cap < 1:
        raise ValueError(f"round_cap must be >= 1, got {cap}")
    return cap


def _isolated(g: Graph, start: int) -> ProtocolTrace | None:
    if g.n > 1 and g.degree(start) == 0:
        return ProtocolTrace(start, g.n, [(start,)], None, 0)
    return None


def _push_with_log(g: Graph, start: int, key: int, cap: int):
    ir = np.full(g.n, -1, dtype=np.int64)
    ir[start] = 0
    first: dict[tuple[int, int], int] = {}
    informed = [start]
    if g.n == 1:
        return 0, ir, first
    for t in range(1, cap + 1):
        new = []
        for u in informed:
            deg = g.degree(u)
            if deg == 0:
                continue
            w = int(g.indices[g.indptr[u] + bounded(draw(key, u, t - int(ir[u])), deg)])
            first.setdefault((u, w), t)
            if ir[w] < 0:
                ir[w] = t
                new.append(w)
        informed.extend(new)
        if len(informed) == g.n:
            return t, ir, first
    return -1, ir, first


def run_push(g, start: int, rng, round_cap: int | None = None,
             record_choices: bool = False) -> ProtocolTrace:
    """Push protocol on ``g`` (a :class:`Graph` or :class:`PercolationSample`).

    Each informed vertex forwards to a uniformly random neighbour every
    round, possibly one it has already informed.
    """
    g = _graph(g)
    cap = _check_start(g, start, round_cap)
    iso = _isolated(g, start)
    if iso is not None:
        return iso
    key = as_stream(rng).key(PUSH)
    if record_choices:
        res, ir, first = _push_with_log(g, start, key, cap)
        trace = trace_from_rounds(start, ir, res, cap)
        trace.per_edge_first_choice = first
        return trace
    ir = np.empty(g.n, dtype=np.int64)
    res = kernels.backend.push_run(g.indptr, g.indices, start, key, cap, ir)
    return trace_from_rounds(start, ir, res, cap)


def run_pwr(g, start: int, rng, round_cap: int | None = None) -> ProtocolTrace:
    """Push without replacement: every vertex walks a uniformly random
    permutation of its neighbours, one per round, then falls silent."""
    g = _graph(g)
    cap = _check_start(g, start, round_cap)
    iso = _isolated(g, start)
    if iso is not None:
        return iso
    ir = np.empty(g.n, dtype=np.int64)
    res = kernels.backend.pwr_run(g.indptr, g.indices, start, as_stream(rng).key(PWR), cap, ir)
    return trace_from_rounds(start, ir, res, cap)


def run_ordered(g: Graph, orderings: np.ndarray, start: int, round_cap: int | None = None) -> ProtocolTrace:
    """PWR driven by fixed per-vertex orderings laid out like ``g.indices``."""
    cap = _check_start(g, start, round_cap)
    iso = _isolated(g, start)
    if iso is not None:
        return iso
    orderings = np.ascontiguousarray(orderings, dtype=np.int32)
    ir = np.empty(g.n, dtype=np.int64)
    res = kernels.backend.ordered_run(g.indptr, orderings, start, cap, ir)
    return trace_from_rounds(start, ir, res, cap)
