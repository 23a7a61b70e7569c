"""Push rumor spreading on bond-percolated graphs."""
from .graph_core import (
    Graph,
    PercolationSample,
    RetryCapExceeded,
    generate_complete,
    generate_complete_bipartite,
    generate_hypercube,
    generate_random_regular,
    is_connected,
    parse_graph_spec,
    percolate,
)
from .kernels import BACKEND
from .protocols import ProtocolTrace, run_ordered, run_push, run_pwr
from .rng import RngStream
from .stochastic import (
    NhParams,
    check_dominance,
    exact_cdf_geom_sum,
    exact_cdf_nh,
    nh_mean,
    nh_pmf,
    sample_nh,
)
from .couplings import build_edge_coupling, conditioned_orderings, run_coupled_push_pwr
from .experiments import estimate_runtime_quantile, export_results, robustness_sweep
from .verification import verify_suite

__version__ = "0.1.0"
