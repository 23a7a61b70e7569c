import json

import numpy as np
import pytest

from rumorperc.experiments import (
    SWEEP_CSV_COLUMNS, SweepResult, estimate_runtime_quantile, export_results, load_results, render,
    robustness_sweep,
)
from rumorperc.graph_core import from_edges, generate_complete, generate_path
from rumorperc.rng import RngStream


def test_k2_quantiles_are_one():
    s = estimate_runtime_quantile(generate_complete(2), 0, "push", 200, 1)
    assert set(s.quantiles.values()) == {1}
    assert s.censored_fraction == 0.0


def test_determinism_and_worker_independence():
    g = generate_complete(128)
    a = estimate_runtime_quantile(g, 0, "pwr", 400, 5)
    b = estimate_runtime_quantile(g, 0, "pwr", 400, 5, workers=4)
    assert a == b
    assert a != estimate_runtime_quantile(g, 0, "pwr", 400, 6)


def test_input_validation():
    g = generate_complete(8)
    with pytest.raises(ValueError):
        estimate_runtime_quantile(g, 0, "push", 99, 1)
    with pytest.raises(ValueError):
        estimate_runtime_quantile(g, 0, "pull", 100, 1)
    with pytest.raises(ValueError):
        estimate_runtime_quantile(g, 9, "push", 100, 1)


def test_disconnected_graph_reports_no_quantiles():
    s = estimate_runtime_quantile(from_edges(4, [(0, 1), (2, 3)]), 0, "push", 100, 1)
    assert s.censored_fraction == 1.0 and s.quantile(0.95) is None


def test_cap_censored_runs_count_at_cap():
    s = estimate_runtime_quantile(generate_path(40), 0, "push", 100, 1, round_cap=5)
    assert s.censored_fraction == 1.0 and s.quantile(0.5) == 5


def test_quantile_stable_under_doubling():
    g = generate_complete(512)
    a = estimate_runtime_quantile(g, 0, "push", 2000, 3).quantile(0.95)
    b = estimate_runtime_quantile(g, 0, "push", 4000, 3).quantile(0.95)
    assert abs(a - b) <= 1


@pytest.fixture(scope="module")
def small_sweep():
    return robustness_sweep(generate_complete(64), 0, [1.0, 0.3, 0.05], 0.1, 300, 11)


def test_sweep_rows(small_sweep):
    r = small_sweep
    assert [row.p for row in r.rows] == [0.05, 0.3, 1.0]
    assert r.rows[-1].ratio_95 == 1.0 and r.rows[-1].summary_gp.quantiles == r.summary_g.quantiles
    assert r.T == r.summary_g.quantile(0.95)
    for row in r.rows:
        assert row.ratio_95 is None or row.ratio_95 >= 0
        assert row.pd_over_T == pytest.approx(row.p * 63 / r.T)
        assert row.in_regime == (row.pd_over_T >= 4)
    assert r.rows[0].disconnect_rate > 0


def test_sweep_rows_independent_of_grid():
    g = generate_complete(64)
    a = robustness_sweep(g, 0, [0.3], 0.1, 200, 2)
    b = robustness_sweep(g, 0, [0.3, 0.7], 0.1, 200, 2)
    assert a.rows[0] == b.rows[0]


def test_sweep_on_tree_is_always_disconnected():
    r = robustness_sweep(generate_path(20), 0, [0.5], 0.1, 200, 1)
    assert r.rows[0].disconnect_rate > 0.99 and r.d == 1


def test_csv_and_json_exports(small_sweep, tmp_path):
    csv_text = render(small_sweep, "csv")
    lines = csv_text.splitlines()
    assert lines[0] == ",".join(SWEEP_CSV_COLUMNS)
    assert len(lines) == 4
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    export_results(small_sweep, a)
    export_results(small_sweep, b)
    assert a.read_bytes() == b.read_bytes()
    back = load_results(a)
    assert isinstance(back, SweepResult)
    assert back.to_dict() == small_sweep.to_dict()
    assert json.loads(a.read_text())["rows"][0]["p"] == 0.05


def test_empty_sweep_is_header_only():
    r = robustness_sweep(generate_complete(16), 0, [], 0.1, 100, 1)
    assert render(r, "csv") == ",".join(SWEEP_CSV_COLUMNS) + "\n"


def test_summary_round_trip(tmp_path):
    s = estimate_runtime_quantile(generate_complete(32), 0, "push", 200, RngStream(4, 2))
    path = tmp_path / "s.json"
    export_results(s, path)
    assert load_results(path) == s
    assert render(s, "csv").splitlines()[0].startswith("graph,n,start,protocol")


def test_export_errors(small_sweep, tmp_path):
    with pytest.raises(OSError, match="nope"):
        export_results(small_sweep, tmp_path / "nope" / "x.json")
    with pytest.raises(ValueError):
        render(small_sweep, "xml")


@pytest.mark.slow
def test_ratio_trend_is_non_increasing_in_p():
    r = robustness_sweep(generate_complete(2048), 0, [16 / 2047, 0.05, 0.25, 1.0], 0.1, 2000, 7)
    ratios = [row.ratio_95 for row in r.rows]
    assert all(b <= a + 0.05 for a, b in zip(ratios, ratios[1:])), ratios
