"""Graph-constrained makespan partitioning: map workload graphs onto machine topologies."""

from .errors import (
    AllRouters,
    AsymmetricEdge,
    BadFactor,
    BadLink,
    BadWeight,
    InconsistentRoute,
    Infeasible,
    InfeasibleMapping,
    InfeasibleTarget,
    InvalidPath,
    MissingRoute,
    NotATree,
    ParseError,
    ProcmapError,
    SelfLoop,
    TooLarge,
)
from .metrics import BaselineMetrics, baseline_metrics
from .objective import (
    LoadState,
    MakespanReport,
    check_mapping,
    comm_load,
    comp_load,
    cut_edges,
    evaluate,
    lower_bound,
    move_delta,
)
from .solvers import SolveConfig, SolveResult, exact_solve, greedy_construct, local_search, solve
from .topology import (
    RouteSet,
    RoutingOracle,
    TableOracle,
    Topology,
    TreeOracle,
    build_routed_topology,
    build_tree_topology,
    compute_bins,
    make_oracle,
    parse_route_table,
    parse_topology,
    table_oracle,
    tree_path,
)
from .workload import WorkloadGraph, format_graph, parse_graph, total_weight

__version__ = "0.1.0"
