import json

import pytest

from rumorperc.verification import (
    SUITES, dominance_first_success, dominance_independent_sum, verify_suite,
)


@pytest.mark.parametrize("suite", ["tailbound", "claim", "coupling"])
def test_monte_carlo_suites_pass_at_small_budget(suite):
    rep = verify_suite(suite, budget=0.05, rng=3)
    assert rep["passed"], [c for c in rep["checks"] if not c["passed"]]
    assert rep["suite"] == suite and rep["seed"] == 3
    assert all({"name", "passed", "stats", "seed"} <= set(c) for c in rep["checks"])
    json.dumps(rep)


def test_small_exact_dominance_checks():
    assert dominance_first_success(kmax=12).passed
    assert dominance_independent_sum(kmax=6).passed


def test_reports_are_reproducible():
    assert verify_suite("claim", 0.02, 8) == verify_suite("claim", 0.02, 8)


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify_suite("everything")
    assert "dominance" in SUITES
