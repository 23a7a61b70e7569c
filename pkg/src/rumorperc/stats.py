"""Goodness-of-fit helpers for the Monte Carlo checks."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import stats as sps


class TestResult(NamedTuple):
    statistic: float
    dof: int
    pvalue: float

    def passes(self, alpha: float) -> bool:
        return self.pvalue >= alpha


def _merge_bins(expected: np.ndarray, min_expected: float) -> list[list[int]]:
    groups: list[list[int]] = []
    cur: list[int] = []
    acc = 0.0
    for i, e in enumerate(expected):
        cur.append(i)
        acc += e
        if acc >= min_expected:
            groups.append(cur)
            cur, acc = [], 0.0
    if cur:
        if groups:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    return groups


def chisquare_gof(observed, probs, min_expected: float = 5.0) -> TestResult:
    """Pearson chi-square of counts against cell probabilities, merging
    adjacent cells until each expected count reaches ``min_expected``."""
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = observed.sum()
    if abs(probs.sum() - 1) > 1e-9:
        raise ValueError(f"cell probabilities sum to {probs.sum()}, not 1")
    groups = _merge_bins(probs * total, min_expected)
    obs = np.array([observed[g].sum() for g in groups])
    exp = np.array([probs[g].sum() * total for g in groups])
    dof = len(groups) - 1
    if dof <= 0:
        return TestResult(0.0, 0, 1.0)
    stat = float(((obs - exp) ** 2 / exp).sum())
    return TestResult(stat, dof, float(sps.chi2.sf(stat, dof)))


def pooled(results) -> TestResult:
    """Combine independent chi-square tests by adding statistics and dofs."""
    stat = sum(r.statistic for r in results)
    dof = sum(r.dof for r in results)
    if dof == 0:
        return TestResult(0.0, 0, 1.0)
    return TestResult(stat, dof, float(sps.chi2.sf(stat, dof)))


def two_sample_chisquare(a, b, min_expected: float = 5.0) -> TestResult:
    """Homogeneity test of two integer samples on merged value bins."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    ca = np.bincount(a - lo, minlength=hi - lo + 1).astype(float)
    cb = np.bincount(b - lo, minlength=hi - lo + 1).astype(float)
    pooled_p = (ca + cb) / (ca.sum() + cb.sum())
    groups = _merge_bins(pooled_p * min(ca.sum(), cb.sum()), min_expected)
    table = np.array([[ca[g].sum() for g in groups], [cb[g].sum() for g in groups]])
    if table.shape[1] < 2:
        return TestResult(0.0, 0, 1.0)
    stat, pvalue, dof, _ = sps.chi2_contingency(table, correction=False)
    return TestResult(float(stat), int(dof), float(pvalue))


def binomial_z(successes: int, trials: int, p0: float) -> float:
    """Normal-approximation z score of a frequency against ``p0``."""
    se = math.sqrt(p0 * (1 - p0) / trials)
    return (successes / trials - p0) / se if se > 0 else 0.0


def dkw_band(n: int, alpha: float) -> float:
    """Half-width of the two-sided DKW confidence band at level ``1 - alpha``."""
    return math.sqrt(math.log(2 / alpha) / (2 * n))


def empirical_survival(sample, ks) -> np.ndarray:
    s = np.sort(np.asarray(sample))
    return 1.0 - np.searchsorted(s, np.asarray(ks), side="left") / s.size
