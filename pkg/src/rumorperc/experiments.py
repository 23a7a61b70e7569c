"""Monte Carlo runtime estimates and percolation robustness sweeps.

"With high probability" is replaced by an empirical quantile (0.95 unless
configured).  Trial ``i`` of a run with master stream ``M`` uses the stream
``M.substream(i)``; its protocol key is shared between the base graph and
every percolated graph, so a ``p = 1`` row reproduces the base runs exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .graph_core import Graph, PercolationSample, is_connected
from .protocols import default_round_cap
from .rng import PERCOLATION, PUSH, PWR, RngStream, as_stream, bernoulli_threshold, percolation_row

__all__ = [
    "QUANTILE_LEVELS",
    "RuntimeSummary",
    "SweepRow",
    "SweepResult",
    "SWEEP_CSV_COLUMNS",
    "estimate_runtime_quantile",
    "robustness_sweep",
    "render",
    "export_results",
]

QUANTILE_LEVELS = (0.5, 0.9, 0.95, 0.99)
IN_REGIME_RATIO = 4.0
SWEEP_CSV_COLUMNS = ("p", "pd_over_T", "t_g_q50", "t_g_q95", "t_gp_q50", "t_gp_q95",
                     "ratio_95", "disconnect_rate", "trials", "seed")
_PROTOCOLS = {"push": (PUSH, 0), "pwr": (PWR, 1)}


@dataclass
class RuntimeSummary:
    graph: str
    n: int
    start: int
    protocol: str
    trials: int
    round_cap: int
    quantiles: dict[float, int | None]
    mean: float | None
    censored_fraction: float
    master_seed: int
    stream_id: int = 0

    def quantile(self, level: float) -> int | None:
        return self.quantiles[level]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quantiles"] = {repr(k): v for k, v in self.quantiles.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RuntimeSummary":
        d = dict(d)
        d["quantiles"] = {float(k): v for k, v in d["quantiles"].items()}
        return cls(**d)


@dataclass
class SweepRow:
    p: float
    pd_over_T: float
    summary_gp: RuntimeSummary
    ratio_95: float | None
    disconnect_rate: float
    in_regime: bool
    within_eps: bool | None


@dataclass
class SweepResult:
    graph: str
    n: int
    d: int
    start: int
    eps: float
    trials: int
    master_seed: int
    quantile_level: float
    T: int
    summary_g: RuntimeSummary
    rows: list[SweepRow] = field(default_factory=list)

    def csv_rows(self) -> list[dict]:
        lvl = self.quantile_level
        out = []
        for row in self.rows:
            out.append({
                "p": row.p,
                "pd_over_T": row.pd_over_T,
                "t_g_q50": self.summary_g.quantiles.get(0.5),
                "t_g_q95": self.summary_g.quantiles.get(lvl),
                "t_gp_q50": row.summary_gp.quantiles.get(0.5),
                "t_gp_q95": row.summary_gp.quantiles.get(lvl),
                "ratio_95": row.ratio_95,
                "disconnect_rate": row.disconnect_rate,
                "trials": self.trials,
                "seed": self.master_seed,
            })
        return out

    def to_dict(self) -> dict:
        rows = []
        for flat, row in zip(self.csv_rows(), self.rows):
            rows.append({**flat, "in_regime": row.in_regime, "within_eps": row.within_eps,
                         "summary_gp": row.summary_gp.to_dict()})
        return {
            "graph": self.graph, "n": self.n, "d": self.d, "start": self.start, "eps": self.eps,
            "trials": self.trials, "master_seed": self.master_seed,
            "quantile_level": self.quantile_level, "T": self.T,
            "summary_g": self.summary_g.to_dict(), "rows": rows,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        rows = [SweepRow(r["p"], r["pd_over_T"], RuntimeSummary.from_dict(r["summary_gp"]),
                         r["ratio_95"], r["disconnect_rate"], r["in_regime"], r["within_eps"])
                for r in d["rows"]]
        return cls(d["graph"], d["n"], d["d"], d["start"], d["eps"], d["trials"], d["master_seed"],
                   d["quantile_level"], d["T"], RuntimeSummary.from_dict(d["summary_g"]), rows)


def _trial_keys(master: RngStream, trials: int, purpose: int, *extra: int) -> np.ndarray:
    return np.array([master.substream(i).key(purpose, *extra) for i in range(trials)], dtype=np.uint64)


def _chunked(fn, arrays, workers: int) -> np.ndarray:
    # split trial arrays into contiguous chunks; results keep trial order
    total = arrays[0].shape[0]
    if workers <= 1 or total < 2 * workers:
        return fn(*arrays)
    bounds = np.linspace(0, total, workers + 1).astype(int)
    parts = [tuple(a[lo:hi] for a in arrays) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(lambda args: fn(*args), parts)))


def _summarise(values: np.ndarray, trials: int, n_censored: int, levels) -> tuple[dict, float | None]:
    if values.size == 0:
        return {q: None for q in levels}, None
    qs = {q: int(np.quantile(values, q, method="inverted_cdf")) for q in levels}
    return qs, float(values.mean())


def estimate_runtime_quantile(g, start: int = 0, protocol: str = "push", trials: int = 1000,
                              rng=0, round_cap: int | None = None, workers: int = 1,
                              levels=QUANTILE_LEVELS) -> RuntimeSummary:
    """Completion-round quantiles over independent runs.

    Runs censored at the round cap count as the cap; on a disconnected
    graph every run is disconnection-censored and no quantile is reported.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if protocol not in _PROTOCOLS:
        raise ValueError(f"protocol must be 'push' or 'pwr', got {protocol!r}")
    if isinstance(g, PercolationSample):
        g = g.graph
    if not 0 <= start < g.n:
        raise ValueError(f"start vertex {start} out of range for n={g.n}")
    master = as_stream(rng)
    cap = default_round_cap(g.n) if round_cap is None else round_cap
    levels = tuple(sorted(levels))
    if not is_connected(g):
        return RuntimeSummary(g.name, g.n, start, protocol, trials, cap,
                              {q: None for q in levels}, None, 1.0, master.seed, master.stream_id)
    purpose, _ = _PROTOCOLS[protocol]
    keys = _trial_keys(master, trials, purpose)
    batch = kernels.backend.push_completion_batch if protocol == "push" else kernels.backend.pwr_completion_batch
    res = _chunked(lambda k: batch(g.indptr, g.indices, start, k, cap), (keys,), workers)
    censored = int((res < 0).sum())
    values = np.where(res < 0, cap, res)
    qs, mean = _summarise(values, trials, censored, levels)
    return RuntimeSummary(g.name, g.n, start, protocol, trials, cap, qs, mean,
                          censored / trials, master.seed, master.stream_id)


def robustness_sweep(g: Graph, start: int, p_grid, eps: float, trials: int, rng=0,
                     round_cap: int | None = None, workers: int = 1, protocol: str = "push",
                     quantile_level: float = 0.95) -> SweepResult:
    """Compare the ``quantile_level`` runtime on ``g`` with fresh percolations of it.

    Disconnected percolation samples are counted in ``disconnect_rate`` and
    left out of the percolated quantiles.  Rows with ``pd/T`` below 4 are
    flagged as outside the regime where the robustness bound applies.
    """
    d = g.regular_degree
    if d is None:
        d = int(g.degrees.min())
    master = as_stream(rng)
    cap = default_round_cap(g.n) if round_cap is None else round_cap
    levels = tuple(sorted(set(QUANTILE_LEVELS) | {quantile_level}))
    base = estimate_runtime_quantile(g, start, protocol, trials, master, cap, workers, levels)
    T = base.quantiles[quantile_level]
    if T is None:
        raise ValueError("base graph is disconnected; the sweep needs a connected graph")
    purpose, proto_code = _PROTOCOLS[protocol]
    run_keys = _trial_keys(master, trials, purpose)
    eu, ev = g.edges
    rows = []
    for p in sorted(float(x) for x in p_grid):
        thr = bernoulli_threshold(p)
        perc_keys = _trial_keys(master, trials, PERCOLATION, percolation_row(p))
        res = _chunked(
            lambda pk, rk: kernels.backend.percolated_completion_batch(
                g.n, eu, ev, pk, thr, rk, start, cap, proto_code),
            (perc_keys, run_keys), workers)
        disconnected = int((res == -2).sum())
        connected = res[res != -2]
        cap_censored = int((connected == -1).sum())
        values = np.where(connected == -1, cap, connected)
        qs, mean = _summarise(values, trials, cap_censored, levels)
        summary = RuntimeSummary(f"{g.name}@p={p}", g.n, start, protocol, trials, cap, qs, mean,
                                 (disconnected + cap_censored) / trials, master.seed, master.stream_id)
        q_gp = qs[quantile_level]
        ratio = None if q_gp is None else q_gp / T
        pd_over_T = p * d / T if T > 0 else math.inf
        rows.append(SweepRow(p, pd_over_T, summary, ratio, disconnected / trials,
                             pd_over_T >= IN_REGIME_RATIO,
                             None if ratio is None else ratio <= 1 + eps))
    return SweepResult(g.name, g.n, d, start, eps, trials, master.seed, quantile_level, T, base, rows)


def _to_jsonable(result):
    if hasattr(result, "to_dict"):
        return result.to_dict()
    return result


def render(result, fmt: str = "json") -> str:
    """Serialise deterministically (sorted keys, no timestamps)."""
    if fmt == "json":
        return json.dumps(_to_jsonable(result), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        if isinstance(result, SweepResult):
            rows, cols = result.csv_rows(), SWEEP_CSV_COLUMNS
        elif isinstance(result, RuntimeSummary):
            flat = {k: v for k, v in result.to_dict().items() if k != "quantiles"}
            flat.update({f"q{k}": v for k, v in result.quantiles.items()})
            rows, cols = [flat], tuple(flat)
        else:
            raise ValueError(f"CSV export is not defined for {type(result).__name__}")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r} (expected csv or json)")


def export_results(result, path, fmt: str = "json") -> None:
    text = render(result, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def load_results(path) -> SweepResult | RuntimeSummary | dict:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if "rows" in obj and "summary_g" in obj:
        return SweepResult.from_dict(obj)
    if "quantiles" in obj and "protocol" in obj:
        return RuntimeSummary.from_dict(obj)
    return obj
