"""Command-line front end.

Exit status: 0 on success, 1 when a verification suite reports a failing
check, 2 on usage or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import graph_core
from .couplings import coupled_run_report
from .experiments import SWEEP_CSV_COLUMNS, estimate_runtime_quantile, render, robustness_sweep
from .verification import SUITES, verify_suite

DEFAULT_SEED = 20240607
SEED_ENV = "RUMORPERC_SEED"

CSV_HELP = (
    "sweep CSV columns, one row per p in increasing order: "
    + ", ".join(SWEEP_CSV_COLUMNS)
    + ". t_g_* are completion-round quantiles on the base graph, t_gp_* on percolated samples "
    "(disconnected samples excluded), ratio_95 = t_gp_q95 / t_g_q95, disconnect_rate is the "
    "fraction of percolated samples that were disconnected. Empty cells mean undefined. "
    "JSON output carries the same fields plus the full runtime summaries."
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    graph_file: str | None = None
    protocol: str = "push"
    p: list[float] = field(default_factory=list)
    trials: int = 1000
    eps: float = 0.1
    round_cap: int | None = None
    seed: int = DEFAULT_SEED
    out: str | None = None
    format: str | None = None
    workers: int = 1
    start: int = 0
    suite: str = "all"
    budget: float = 1.0
    T: int | None = None

    def load_graph(self):
        if (self.graph is None) == (self.graph_file is None):
            raise UsageError("give exactly one of --graph or --graph-file")
        if self.graph_file is not None:
            return graph_core.load_edge_list(self.graph_file)
        return graph_core.parse_graph_spec(self.graph, self.seed)

    def output_format(self, default: str = "json") -> str:
        if self.format:
            return self.format
        if self.out and self.out.lower().endswith(".csv"):
            return "csv"
        return default


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _prob_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated probabilities, got {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise argparse.ArgumentTypeError(f"probabilities must lie in (0, 1], got {text!r}")
    return values


def _graph_flags(sp):
    g = sp.add_argument_group("graph source (exactly one)")
    g.add_argument("--graph", metavar="SPEC",
                   help="generator spec: complete:N, hypercube:DIM, regular:N:D, bipartite:K, path:N, star:LEAVES")
    g.add_argument("--graph-file", metavar="PATH", help="edge list: 'n m' header then one 'u v' line per edge")


def _common_flags(sp, formats=("json", "csv")):
    sp.add_argument("--seed", type=int, default=None,
                    help=f"master seed (default: ${SEED_ENV} if set, else {DEFAULT_SEED})")
    sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    sp.add_argument("--format", choices=formats,
                    help="output format (default: csv if --out ends in .csv, else json)")
    sp.add_argument("--config", metavar="JSON",
                    help="JSON object whose keys mirror the long flags (dashes as underscores); "
                         "explicit flags take precedence")


def _run_flags(sp):
    sp.add_argument("--protocol", choices=("push", "pwr"), default="push", help="spreading protocol")
    sp.add_argument("--trials", type=int, default=1000, help="independent runs (at least 100)")
    sp.add_argument("--round-cap", type=int, default=None,
                    help="censor runs at this round (default: ceil(8 (log2 n + ln n)))")
    sp.add_argument("--start", type=int, default=0, help="start vertex id")
    sp.add_argument("--workers", type=int, default=1, help="worker threads for trial batches")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumorperc",
        description="Push rumor spreading on percolated graphs: simulation, sweeps and distributional checks.",
        epilog=CSV_HELP,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    parser.commands = sub.choices

    sp = sub.add_parser("gen-graph", help="write a generated graph as an edge list", epilog=CSV_HELP)
    _graph_flags(sp)
    _common_flags(sp, formats=("edgelist",))

    sp = sub.add_parser("simulate", help="runtime quantiles of one protocol on one graph", epilog=CSV_HELP)
    _graph_flags(sp)
    _run_flags(sp)
    _common_flags(sp)

    sp = sub.add_parser("sweep", help="compare runtime on a graph with its percolations", epilog=CSV_HELP)
    _graph_flags(sp)
    _run_flags(sp)
    sp.add_argument("--p", type=_prob_list, required=False, metavar="P[,P...]",
                    help="comma-separated retention probabilities")
    sp.add_argument("--eps", type=float, default=0.1, help="tolerance for the within_eps flag")
    _common_flags(sp)

    sp = sub.add_parser("verify", help="run the distributional verification suites", epilog=CSV_HELP)
    sp.add_argument("--suite", choices=SUITES + ("all",), default="all", help="which suite to run")
    sp.add_argument("--budget", type=float, default=1.0, help="Monte Carlo sample-size multiplier")
    _common_flags(sp, formats=("json",))

    sp = sub.add_parser("couple", help="run the push/PWR and percolation couplings", epilog=CSV_HELP)
    _graph_flags(sp)
    sp.add_argument("--p", type=_prob_list, metavar="P", help="retention probability (one value)")
    sp.add_argument("--T", type=int, default=None,
                    help="round budget (default: 0.95 push quantile over --trials runs)")
    sp.add_argument("--trials", type=int, default=100, help="coupled runs")
    sp.add_argument("--round-cap", type=int, default=None, help="censor runs at this round")
    sp.add_argument("--start", type=int, default=0, help="start vertex id")
    _common_flags(sp, formats=("json",))
    return parser


def _parse(argv) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    values = vars(args)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
        # re-parse with the config as defaults so explicit flags still win
        sub = parser.commands[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known - {"command"})
        if unknown:
            raise UsageError(f"config {args.config}: unknown keys {', '.join(unknown)}")
        if "p" in cfg and not isinstance(cfg["p"], list):
            cfg["p"] = [cfg["p"]]
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "command"})
        values = vars(parser.parse_args(argv))
    values.pop("config", None)
    if values.get("seed") is None:
        values["seed"] = default_seed()
    values = {k: v for k, v in values.items() if v is not None or k in ("round_cap", "T", "out", "format")}
    fields_ = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in values.items() if k in fields_})


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {cfg.out}: {exc.strerror or exc}") from None


def _edge_list_text(g) -> str:
    eu, ev = g.edges
    lines = [f"{g.n} {eu.shape[0]}"]
    lines.extend(f"{u} {v}" for u, v in zip(eu.tolist(), ev.tolist()))
    return "\n".join(lines) + "\n"


def dispatch(cfg: RunConfig) -> int:
    if cfg.command == "gen-graph":
        _emit(cfg, _edge_list_text(cfg.load_graph()))
        return 0
    if cfg.command == "simulate":
        summary = estimate_runtime_quantile(cfg.load_graph(), cfg.start, cfg.protocol, cfg.trials,
                                            cfg.seed, cfg.round_cap, cfg.workers)
        _emit(cfg, render(summary, cfg.output_format()))
        return 0
    if cfg.command == "sweep":
        if not cfg.p:
            raise UsageError("sweep needs --p (comma-separated probabilities)")
        result = robustness_sweep(cfg.load_graph(), cfg.start, cfg.p, cfg.eps, cfg.trials, cfg.seed,
                                  cfg.round_cap, cfg.workers, cfg.protocol)
        _emit(cfg, render(result, cfg.output_format()))
        return 0
    if cfg.command == "verify":
        report = verify_suite(cfg.suite, cfg.budget, cfg.seed)
        _emit(cfg, json.dumps(report, sort_keys=True, indent=2) + "\n")
        return 0 if report["passed"] else 1
    if cfg.command == "couple":
        if len(cfg.p) != 1:
            raise UsageError("couple needs exactly one --p value")
        g = cfg.load_graph()
        T = cfg.T
        if T is None:
            T = estimate_runtime_quantile(g, cfg.start, "push", max(cfg.trials, 100), cfg.seed,
                                          cfg.round_cap).quantiles[0.95]
            if T is None:
                raise UsageError("graph is disconnected; pass --T explicitly")
        report = coupled_run_report(g, cfg.p[0], T, cfg.trials, cfg.seed, cfg.start, cfg.round_cap)
        _emit(cfg, json.dumps(report, sort_keys=True, indent=2) + "\n")
        return 0
    raise UsageError(f"unknown command {cfg.command!r}")  # pragma: no cover


def run_command(argv=None) -> int:
    try:
        cfg = _parse(argv)
        return dispatch(cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (UsageError, ValueError, OSError, graph_core.RetryCapExceeded) as exc:
        print(f"rumorperc: error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
