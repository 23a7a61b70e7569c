"""Machine-checkable versions of the distributional facts behind the robustness bound.

Every check returns a :class:`Check`; failures are data, not exceptions.
``budget`` scales the Monte Carlo sample sizes (1.0 is full size); the
exact dominance checks ignore it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sps

from . import stats
from .couplings import (
    build_edge_coupling,
    conditioned_orderings,
    containment_holds,
    run_coupled_push_pwr,
    sample_conditioned_ranks,
    sample_distinct_pick_batch,
    sample_pair_coupling,
)
from .graph_core import generate_complete, generate_complete_bipartite, generate_hypercube
from .protocols import run_pwr
from .rng import RngStream
from .stochastic import (
    NhParams,
    check_dominance,
    convolve,
    exact_cdf_geom_sum,
    exact_cdf_nh,
    geom_sum_tail_bound,
    nh_pmf,
    tail_bound_delta,
)

ALPHA = 1e-3
Z_ALPHA = float(sps.norm.isf(ALPHA / 2))
SUITES = ("dominance", "tailbound", "claim", "coupling")


@dataclass
class Check:
    name: str
    passed: bool
    seed: int | None = None
    stats: dict = field(default_factory=dict)


def _n(base: int, budget: float, floor: int = 100) -> int:
    return max(floor, int(round(base * budget)))


# ---------------------------------------------------------------- dominance


def dominance_first_success(kmax: int = 30) -> Check:
    """NH(k1 + k2, k1, 1) is dominated by Geo(k1 / (k1 + k2))."""
    checked = 0
    for k1 in range(1, kmax + 1):
        for k2 in range(1, kmax + 1):
            N = k1 + k2
            nh = exact_cdf_nh(NhParams(N, k1, 1), exact=True)
            geo = exact_cdf_geom_sum(1, Fraction(k1, N), k2 + 2)
            res = check_dominance(nh, geo)
            checked += 1
            if not res.holds:
                return Check("nh_first_success", False, stats={"k1": k1, "k2": k2, "at": res.first_violation})
    return Check("nh_first_success", True, stats={"cases": checked})


def dominance_gaps(kmax: int = 30) -> Check:
    """Given X_j = k the next gap is NH(N - k, k1 - j, 1), dominated by Geo((k1 - j) / N)."""
    checked = 0
    cache: dict[tuple[int, int], object] = {}
    for k1 in range(2, kmax + 1):
        for k2 in range(1, kmax + 1):
            N = k1 + k2
            for j in range(1, k1):
                geo = exact_cdf_geom_sum(1, Fraction(k1 - j, N), k2 + 2)
                for k in range(j, k2 + j + 1):
                    key = (N - k, k1 - j)
                    if key not in cache:
                        cache[key] = exact_cdf_nh(NhParams(N - k, k1 - j, 1), exact=True)
                    res = check_dominance(cache[key], geo)
                    checked += 1
                    if not res.holds:
                        return Check("nh_conditional_gap", False,
                                     stats={"k1": k1, "k2": k2, "j": j, "given": k, "at": res.first_violation})
    return Check("nh_conditional_gap", True, stats={"cases": checked})


def dominance_composition(kmax: int = 30) -> Check:
    """NH(k1 + k2, k1, j) is dominated by a sum of j Geo((k1 - j) / (k1 + k2))."""
    checked = 0
    for k1 in range(2, kmax + 1):
        for k2 in range(1, kmax + 1):
            N = k1 + k2
            for j in range(1, k1):
                nh = exact_cdf_nh(NhParams(N, k1, j), exact=True)
                bound = exact_cdf_geom_sum(j, Fraction(k1 - j, N), k2 + j + 1)
                res = check_dominance(nh, bound)
                checked += 1
                if not res.holds:
                    return Check("nh_geometric_sum", False,
                                 stats={"k1": k1, "k2": k2, "j": j, "at": res.first_violation})
    return Check("nh_geometric_sum", True, stats={"cases": checked})


def dominance_independent_sum(kmax: int = 10) -> Check:
    """NH(., ., j) + NH(., ., l) independent is dominated by j + l geometrics
    with parameter (k1 - max(j, l)) / (k1 + k2)."""
    checked = 0
    for k1 in range(2, kmax + 1):
        for k2 in range(1, kmax + 1):
            N = k1 + k2
            tables = {j: exact_cdf_nh(NhParams(N, k1, j), exact=True) for j in range(1, k1)}
            for j in range(1, k1):
                for l in range(j, k1):
                    total = convolve(tables[j], tables[l])
                    bound = exact_cdf_geom_sum(j + l, Fraction(k1 - max(j, l), N), total.last_known)
                    res = check_dominance(total, bound)
                    checked += 1
                    if not res.holds:
                        return Check("nh_independent_sum", False,
                                     stats={"k1": k1, "k2": k2, "j": j, "l": l, "at": res.first_violation})
    return Check("nh_independent_sum", True, stats={"cases": checked})


# ---------------------------------------------------------------- tail bound


def tailbound_grid(seed: int, budget: float = 1.0, rs=(5, 10, 20), Cs=(1.5, 2.0, 3.0),
                   epss=(0.5, 1.0)) -> Check:
    """Monte Carlo P(G_1 + ... + G_r > (1 + eps) r) at parameter 1 - delta
    never exceeds exp(-(C - 1) r) by more than 3 standard errors."""
    samples = _n(10 ** 6, budget)
    gen = RngStream(seed, 1).generator()
    rows = []
    ok = True
    for r in rs:
        for C in Cs:
            for eps in epss:
                delta = tail_bound_delta(eps, C)
                hits = 0
                left = samples
                while left:
                    chunk = min(left, 200_000)
                    sums = gen.geometric(1 - delta, size=(chunk, r)).sum(axis=1)
                    hits += int((sums > (1 + eps) * r).sum())
                    left -= chunk
                est = hits / samples
                se = math.sqrt(est * (1 - est) / samples)
                bound = geom_sum_tail_bound(r, C)
                good = est <= bound + 3 * se
                ok &= good
                rows.append({"r": r, "C": C, "eps": eps, "delta": delta, "estimate": est,
                             "se": se, "bound": bound, "passed": good})
    return Check("geometric_tail_bound", ok, seed, {"samples": samples, "grid": rows})


# ---------------------------------------------------------------- claim


def claim_distinct_picks(seed: int, budget: float = 1.0, s: int = 3) -> Check:
    """First appearances in an i.i.d. uniform sequence: uniform permutation,
    gap k ~ Geo(1 - (k - 1)/s), gaps independent of the permutation."""
    size = _n(10 ** 6, budget)
    perms, gaps = sample_distinct_pick_batch(s, s, RngStream(seed, 2).generator(), size)
    codes = np.zeros(size, dtype=np.int64)
    for col in range(s):
        codes = codes * s + perms[:, col]
    all_perms = sorted({sum(p[i] * s ** (s - 1 - i) for i in range(s)) for p in _permutations(s)})
    counts = np.array([(codes == c).sum() for c in all_perms])
    perm_test = stats.chisquare_gof(counts, np.full(len(all_perms), 1 / len(all_perms)))
    results = {"permutation": perm_test._asdict(), "first_gap_is_one": bool(np.all(gaps[:, 0] == 1))}
    ok = perm_test.passes(ALPHA) and results["first_gap_is_one"]
    for k in range(2, s + 1):
        p = 1 - (k - 1) / s
        g = gaps[:, k - 1]
        top = int(g.max())
        obs = np.bincount(g, minlength=top + 2)[1:top + 2]
        probs = np.array([(1 - p) ** (m - 1) * p for m in range(1, top + 1)] + [(1 - p) ** top])
        t = stats.chisquare_gof(obs, probs)
        results[f"gap_{k}"] = t._asdict()
        ok &= t.passes(ALPHA)
    # independence of the permutation from the second gap
    g2 = np.minimum(gaps[:, 1], 6)
    table = np.array([[np.sum((codes == c) & (g2 == v)) for v in range(1, 7)] for c in all_perms])
    table = table[:, table.sum(axis=0) > 0]
    chi, pval, dof, _ = sps.chi2_contingency(table, correction=False)
    results["independence"] = {"statistic": float(chi), "dof": int(dof), "pvalue": float(pval)}
    ok &= pval >= ALPHA
    return Check("distinct_pick_claim", bool(ok), seed, {"runs": size, "s": s, **results})


def _permutations(s):
    from itertools import permutations

    return permutations(range(s))


# ---------------------------------------------------------------- couplings


def pair_coupling_check(seed: int, budget: float = 1.0, p: float = 0.5, r: float = 0.2) -> Check:
    n = _n(10 ** 6, budget)
    (l1, l2), (u1, u2) = sample_pair_coupling(p, r, RngStream(seed, 3).generator(), size=n)
    q = p * r * (1 - r / 2)
    dominated = bool(np.all(l1 <= u1) and np.all(l2 <= u2))
    z_low = stats.binomial_z(int(l1.sum()), n, q)
    z_up = stats.binomial_z(int(u1.sum()), n, p * r)
    z_both = stats.binomial_z(int((u1 & u2).sum()), n, p * r * r)
    rho = float(np.corrcoef(l1, l2)[0, 1])
    ok = dominated and max(abs(z_low), abs(z_up), abs(z_both)) <= 3 and abs(rho) <= 3 / math.sqrt(n)
    return Check("pair_transport", bool(ok), seed, {
        "draws": n, "q": q, "coordinatewise": dominated, "z_lower_marginal": z_low,
        "z_upper_marginal": z_up, "z_upper_both": z_both, "lower_correlation": rho,
    })


def edge_coupling_check(seed: int, budget: float = 1.0, d: int = 100, p: float = 0.5, T: int = 10) -> Check:
    """N^p_u ~ Bin(d, CT/d), excess per directed edge ~ Be((CT/d)^2 / (2p)),
    N_u within N^p_u, and {A_e = 1} distributed as a percolation."""
    g = generate_complete_bipartite(d)
    samples = _n(10 ** 5, budget)
    builds = math.ceil(samples / d)
    left = np.arange(d)
    np_counts, n_counts = [], []
    excess = arcs = kept = 0
    nested = True
    for b in range(builds):
        c = build_edge_coupling(g, p, T, RngStream(seed, 1000 + b).generator())
        nested &= bool(np.all(c.I <= c.Ip))
        np_counts.append(c.Np[left])
        n_counts.append(c.N[left])
        excess += int((c.Ip & ~c.I).sum())
        arcs += c.I.size
        kept += int(c.A.sum())
    par_ct_d = c.C_value * T / d
    np_counts = np.concatenate(np_counts)[:samples]
    n_counts = np.concatenate(n_counts)[:samples]
    ks = np.arange(d + 1)
    t_np = stats.chisquare_gof(np.bincount(np_counts, minlength=d + 1), sps.binom.pmf(ks, d, par_ct_d))
    t_n = stats.chisquare_gof(np.bincount(n_counts, minlength=d + 1), sps.binom.pmf(ks, d, c.q))
    p_excess = par_ct_d ** 2 / (2 * p)
    z_excess = stats.binomial_z(excess, arcs, p_excess)
    z_perc = stats.binomial_z(kept, builds * g.edge_count, p)
    ok = (nested and t_np.passes(ALPHA) and t_n.passes(ALPHA)
          and abs(z_excess) <= Z_ALPHA and abs(z_perc) <= Z_ALPHA)
    return Check("edge_indicator_coupling", bool(ok), seed, {
        "samples": int(np_counts.size), "CT_over_d": par_ct_d, "q_proof": c.q, "q_statement": c.q_statement,
        "nested": nested, "Np_binomial": t_np._asdict(), "N_binomial": t_n._asdict(),
        "excess_rate": excess / arcs, "excess_expected": p_excess, "z_excess": z_excess,
        "z_percolation": z_perc,
    })


def ordering_law_check(seed: int, budget: float = 1.0, d: int = 60, p: float = 0.6, T: int = 6,
                       min_cell: int = 20) -> Check:
    """Rank in Ord^p_u of the j-th element of N_u follows NH(N^p_u, N_u, j),
    tested cell by cell on (N^p_u, N_u, j) and pooled."""
    g = generate_complete_bipartite(d)
    samples = _n(10 ** 5, budget)
    rows = []
    got = b = 0
    consistent = True
    from .couplings import orderings_consistent

    while got < samples:
        stream = RngStream(seed, 5000 + b)
        c = build_edge_coupling(g, p, T, stream.substream(1).generator())
        o = conditioned_orderings(c, stream.substream(2).generator())
        if b < 50:
            consistent &= orderings_consistent(c, o)
        part = sample_conditioned_ranks(c, o, range(d), stream.substream(3).generator())
        rows.append(part)
        got += part.shape[0]
        b += 1
    data = np.concatenate(rows)[:samples]
    tests = []
    used = 0
    cells = {}
    for l, m, j, rank in data.tolist():
        cells.setdefault((l, m, j), []).append(rank)
    for (l, m, j), ranks in cells.items():
        if len(ranks) < min_cell:
            continue
        params = NhParams(l, m, j)
        support = list(params.support)
        probs = np.array([nh_pmf(params, k) for k in support])
        probs = probs / probs.sum()
        obs = np.bincount(np.array(ranks) - support[0], minlength=len(support))
        tests.append(stats.chisquare_gof(obs, probs))
        used += len(ranks)
    total = stats.pooled(tests)
    ok = consistent and total.passes(ALPHA)
    return Check("conditioned_ordering_law", bool(ok), seed, {
        "samples": int(data.shape[0]), "samples_tested": used, "cells": len(tests),
        "order_preserved": consistent, "pooled": total._asdict(),
    })


def push_pwr_coupling_check(seed: int, budget: float = 1.0) -> Check:
    """Pathwise containment and correct marginals for the shared-sequence coupling."""
    from .protocols import run_push

    runs = _n(10 ** 4, budget)
    out = {}
    ok = True
    for g in (generate_complete(16), generate_hypercube(4)):
        push_c, pwr_c, push_u, pwr_u = [], [], [], []
        contained = True
        for i in range(runs):
            a, w = run_coupled_push_pwr(g, 0, RngStream(seed, i))
            contained &= containment_holds(a, w)
            push_c.append(a.completion_round)
            pwr_c.append(w.completion_round)
            ref = RngStream(seed + 1, i)
            push_u.append(run_push(g, 0, ref).completion_round)
            pwr_u.append(run_pwr(g, 0, ref).completion_round)
        if None in push_c + pwr_c + push_u + pwr_u:
            contained = False
        t_push = stats.two_sample_chisquare(push_c, push_u)
        t_pwr = stats.two_sample_chisquare(pwr_c, pwr_u)
        good = contained and t_push.passes(ALPHA) and t_pwr.passes(ALPHA)
        ok &= good
        out[g.name] = {"containment": contained, "push_marginal": t_push._asdict(),
                       "pwr_marginal": t_pwr._asdict(), "passed": good}
    return Check("push_pwr_coupling", bool(ok), seed, {"runs": runs, **out})


def verify_suite(which: str = "all", budget: float = 1.0, rng: int = 0) -> dict:
    """Run the named suite and return a JSON-ready report."""
    if which not in SUITES + ("all",):
        raise ValueError(f"unknown suite {which!r} (expected one of {', '.join(SUITES)}, all)")
    seed = rng.seed if isinstance(rng, RngStream) else int(rng)
    chosen = SUITES if which == "all" else (which,)
    checks: list[Check] = []
    if "dominance" in chosen:
        checks += [dominance_first_success(), dominance_gaps(), dominance_composition(),
                   dominance_independent_sum()]
    if "tailbound" in chosen:
        checks.append(tailbound_grid(seed, budget))
    if "claim" in chosen:
        checks.append(claim_distinct_picks(seed, budget))
    if "coupling" in chosen:
        checks += [pair_coupling_check(seed, budget), edge_coupling_check(seed, budget),
                   ordering_law_check(seed, budget), push_pwr_coupling_check(seed, budget)]
    return {
        "suite": which,
        "seed": seed,
        "budget": budget,
        "alpha": ALPHA,
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }
