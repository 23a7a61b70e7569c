"""Discrete distributions used by the coupling arguments.

Geometric variables count trials up to and including the first success, so
their support starts at 1 and ``P(G >= m) = (1 - p) ** (m - 1)``.

Exact CDFs are exposed as :class:`DiscreteCdf` survival tables.  Passing a
:class:`fractions.Fraction` parameter (or ``exact=True``) keeps every entry
rational, which is what the dominance checks use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .rng import as_generator

__all__ = [
    "NhParams",
    "DiscreteCdf",
    "Dominance",
    "sample_geometric",
    "nh_pmf",
    "nh_mean",
    "sample_nh",
    "exact_cdf_nh",
    "exact_cdf_geom_sum",
    "convolve",
    "check_dominance",
    "geom_sum_tail_bound",
    "tail_bound_delta",
]

EXACT_NH_LIMIT = 10_000
_COMB_LIMIT = 1000


@dataclass(frozen=True)
class NhParams:
    """Negative hypergeometric NH(N, d, r): draw without replacement from a
    population of ``population`` items, ``successes`` of them successes, and
    stop at the ``rank``-th success."""

    population: int
    successes: int
    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= self.successes <= self.population:
            raise ValueError(
                f"need 1 <= rank <= successes <= population, got "
                f"NH({self.population}, {self.successes}, {self.rank})"
            )

    @property
    def support(self) -> range:
        N, d, r = self.population, self.successes, self.rank
        return range(r, N - d + r + 1)


@dataclass(frozen=True)
class DiscreteCdf:
    """Survival table ``survival[i] = P(X >= support_start + i)``.

    For a finite support the last entry is 0.  A truncated infinite support
    stores survival up to ``truncate_at + 1``, where the last entry equals
    ``tail_mass_bound = P(X > truncate_at)``; beyond that only the bound is known.
    """

    support_start: int
    survival: tuple
    tail_mass_bound: float | Fraction = 0

    def __post_init__(self):
        s = self.survival
        if not s or s[0] != 1:
            raise ValueError("survival must start at 1")
        if any(b > a for a, b in zip(s, s[1:])):
            raise ValueError("survival must be non-increasing")
        if s[-1] < 0:
            raise ValueError("survival values must be in [0, 1]")

    @property
    def last_known(self) -> int:
        return self.support_start + len(self.survival) - 1

    @property
    def exact(self) -> bool:
        return self.tail_mass_bound == 0

    def survival_at(self, k: int):
        """``P(X >= k)``; beyond a truncation this is the upper bound ``tail_mass_bound``."""
        if k <= self.support_start:
            return self.survival[0]
        i = k - self.support_start
        if i < len(self.survival):
            return self.survival[i]
        return self.tail_mass_bound

    def pmf(self) -> list:
        s = self.survival
        return [a - b for a, b in zip(s, s[1:])]

    @classmethod
    def from_pmf(cls, start: int, pmf, tail=0) -> "DiscreteCdf":
        """Build from ``pmf[i] = P(X = start + i)``; ``tail`` is the mass beyond."""
        surv = []
        acc = tail
        for v in reversed(list(pmf)):
            acc = acc + v
            surv.append(acc)
        surv.reverse()
        surv.append(tail)
        surv[0] = type(surv[0])(1)
        return cls(start, tuple(surv), tail)


class Dominance(NamedTuple):
    holds: bool
    first_violation: int | None


def sample_geometric(p: float, rng, size=None):
    """Trials up to and including the first success."""
    if not 0 < p <= 1:
        raise ValueError(f"geometric parameter must be in (0, 1], got {p}")
    out = as_generator(rng).geometric(p, size=size)
    return int(out) if size is None else out


def _comb_counts(params: NhParams) -> tuple[list[int], int]:
    # numerators of the pmf over the support, sharing denominator C(N, d)
    N, d, r = params.population, params.successes, params.rank
    nums = [math.comb(k - 1, r - 1) * math.comb(N - k, d - r) for k in params.support]
    return nums, math.comb(N, d)


def nh_pmf(params: NhParams, k: int) -> float:
    N, d, r = params.population, params.successes, params.rank
    if k < r or k > N - d + r:
        return 0.0
    if N <= _COMB_LIMIT:
        return math.comb(k - 1, r - 1) * math.comb(N - k, d - r) / math.comb(N, d)
    lg = math.lgamma
    log_num = (lg(k) - lg(r) - lg(k - r + 1)) + (lg(N - k + 1) - lg(d - r + 1) - lg(N - k - d + r + 1))
    log_den = lg(N + 1) - lg(d + 1) - lg(N - d + 1)
    return math.exp(log_num - log_den)


def nh_mean(params: NhParams) -> Fraction:
    return Fraction(params.rank * (params.population + 1), params.successes + 1)


def sample_nh(params: NhParams, rng, size=None):
    """Simulate sequential draws without replacement; return the index of the
    ``rank``-th success."""
    gen = as_generator(rng)
    N, d, r = params.population, params.successes, params.rank
    shape = () if size is None else size
    count = int(np.prod(shape))
    succ_left = np.full(count, d, dtype=np.int64)
    found = np.zeros(count, dtype=np.int64)
    result = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    for step in range(1, N + 1):
        if active.size == 0:
            break
        left = N - step + 1
        hit = gen.random(active.size) * left < succ_left[active]
        succ_left[active] -= hit
        found[active] += hit
        done = found[active] == r
        result[active[done]] = step
        active = active[~done]
    return int(result[0]) if size is None else result.reshape(shape)


def exact_cdf_nh(params: NhParams, exact: bool = False) -> DiscreteCdf:
    if params.population > EXACT_NH_LIMIT:
        raise ValueError(f"exact NH tables are limited to N <= {EXACT_NH_LIMIT}, got {params.population}")
    nums, den = _comb_counts(params)
    suffix = []
    acc = 0
    for v in reversed(nums):
        acc += v
        suffix.append(acc)
    suffix.reverse()
    suffix.append(0)
    if exact:
        surv = tuple(Fraction(s, den) for s in suffix)
        zero = Fraction(0)
    else:
        surv = tuple(s / den for s in suffix)
        zero = 0.0
    surv = (type(surv[0])(1),) + surv[1:]
    return DiscreteCdf(params.rank, surv, zero)


def exact_cdf_geom_sum(count_terms: int, p, truncate_at: int, exact: bool | None = None) -> DiscreteCdf:
    """Law of ``G_1 + ... + G_j`` for i.i.d. Geo(p), by iterated convolution.

    Convolving with a geometric kernel obeys
    ``f_i(k) = (1 - p) f_i(k - 1) + p f_{i-1}(k - 1)``, so each of the ``j``
    convolution steps is linear in the truncation length.
    """
    j = count_terms
    if j < 1:
        raise ValueError(f"need at least one term, got {j}")
    if not 0 < p <= 1:
        raise ValueError(f"geometric parameter must be in (0, 1], got {p}")
    if truncate_at < j:
        raise ValueError(f"truncate_at must be >= {j}, got {truncate_at}")
    if exact is None:
        exact = isinstance(p, Fraction)
    p = Fraction(p) if exact else float(p)
    q = 1 - p
    zero = p * 0
    L = truncate_at
    prev = [zero] * (L + 1)
    prev[0] = zero + 1  # point mass at 0: sum of zero terms
    for i in range(1, j + 1):
        cur = [zero] * (L + 1)
        for k in range(i, L + 1):
            cur[k] = q * cur[k - 1] + p * prev[k - 1]
        prev = cur
    pmf = prev[j:]
    cdf = zero
    surv = []
    for v in pmf:
        surv.append(1 - cdf)
        cdf = cdf + v
    tail = 1 - cdf
    if not exact:
        tail = max(tail, 0.0)
    surv.append(tail)
    surv[0] = zero + 1
    # clamp float drift so the table stays non-increasing
    if not exact:
        for i in range(1, len(surv)):
            surv[i] = min(max(surv[i], 0.0), surv[i - 1])
    return DiscreteCdf(j, tuple(surv), tail)


def convolve(a: DiscreteCdf, b: DiscreteCdf) -> DiscreteCdf:
    """Law of the sum of independent finite-support variables."""
    if not (a.exact and b.exact):
        raise ValueError("convolution needs finite (untruncated) supports")
    pa, pb = a.pmf(), b.pmf()
    zero = pa[0] * 0
    out = [zero] * (len(pa) + len(pb) - 1)
    for i, x in enumerate(pa):
        if x:
            for k, y in enumerate(pb):
                out[i + k] += x * y
    return DiscreteCdf.from_pmf(a.support_start + b.support_start, out, zero)


def check_dominance(lower: DiscreteCdf, upper: DiscreteCdf, atol=None) -> Dominance:
    """Check ``P(lower >= k) <= P(upper >= k)`` for every integer ``k``.

    Where ``upper`` is truncated its survival is replaced by the tail bound,
    and where ``lower`` is truncated by 0, so truncation never produces a
    spurious violation.
    """
    if atol is None:
        rational = all(isinstance(x, (Fraction, int)) for x in lower.survival + upper.survival)
        atol = 0 if rational else 1e-12
    lo_k = min(lower.support_start, upper.support_start)
    hi_k = max(lower.last_known, upper.last_known) + 1
    for k in range(lo_k, hi_k + 1):
        if k > lower.last_known:
            s_low = 0
        else:
            s_low = lower.survival_at(k)
        s_up = upper.survival_at(k)
        if s_low > s_up + atol:
            return Dominance(False, k)
    return Dominance(True, None)


def geom_sum_tail_bound(r: int, C: float) -> float:
    """Upper bound ``exp(-(C - 1) r)`` on ``P(G_1 + ... + G_r > (1 + eps) r)``
    for geometric parameter at least ``1 - tail_bound_delta(eps, C)``."""
    if C <= 1:
        raise ValueError(f"C must exceed 1, got {C}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return math.exp(-(C - 1) * r)


def tail_bound_delta(eps: float, C: float) -> float:
    """Largest ``delta`` with ``delta * exp(C / eps) <= sqrt(delta) <= 1/2``."""
    if eps <= 0 or C <= 1:
        raise ValueError(f"need eps > 0 and C > 1, got eps={eps}, C={C}")
    return min(0.25, math.exp(-2 * C / eps))
