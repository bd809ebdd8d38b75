"""Guaranteed modularity maximization via branch-and-cut.

Library surface: graphs and modularity (``graphs``), partitions and AMI
(``partitions``), the gain-matrix local search (``heuristic``), the sparse
IP model and LP relaxations (``ipmodel``), and the search engine
(``solver``). The CLI (``cli``) and HTTP service (``service``) are thin
clients over ``runner``.
"""

__version__ = "0.1.0"

from .graphs import (
    ContractionMap,
    EdgeListParseError,
    Graph,
    GraphError,
    ModularityMatrix,
    connected_components,
    contract,
    degrees,
    induced_subgraph,
    largest_connected_component,
    modularity,
    modularity_matrix,
    parse_edge_list,
)
from .heuristic import (
    GainMatrix,
    HeuristicConfig,
    HeuristicError,
    heuristic_modularity,
    maximize_gain,
    perturb_for_right_cut,
    perturb_pairs,
)
from .ipmodel import (
    BranchState,
    LpSolution,
    SparseModel,
    build_sparse_model,
    find_violated_triples,
    separating_set,
    solve_lp_relaxation,
    write_lp_text,
)
from .lp import DEFAULT_BACKEND, HighsBackend, LpBackend, LpBackendError
from .partitions import (
    PairAssignment,
    Partition,
    PartitionError,
    ami,
    pairs_from_partition,
    partition_from_pairs,
)
from .runner import SolveOptions, run_solve
from .solver import (
    ProgressRow,
    SolveReport,
    SolveStats,
    SolverError,
    TerminationCriteria,
    TreeNode,
    branch_on_pair,
    branch_on_triple,
    fathom_check,
    gap,
    select_triple,
    solve,
)

__all__ = [
    "__version__",
    "BranchState",
    "ContractionMap",
    "DEFAULT_BACKEND",
    "EdgeListParseError",
    "GainMatrix",
    "Graph",
    "GraphError",
    "HeuristicConfig",
    "HeuristicError",
    "HighsBackend",
    "LpBackend",
    "LpBackendError",
    "LpSolution",
    "ModularityMatrix",
    "PairAssignment",
    "Partition",
    "PartitionError",
    "ProgressRow",
    "SolveOptions",
    "SolveReport",
    "SolveStats",
    "SolverError",
    "SparseModel",
    "TerminationCriteria",
    "TreeNode",
    "ami",
    "branch_on_pair",
    "branch_on_triple",
    "build_sparse_model",
    "connected_components",
    "contract",
    "degrees",
    "fathom_check",
    "find_violated_triples",
    "gap",
    "heuristic_modularity",
    "induced_subgraph",
    "largest_connected_component",
    "maximize_gain",
    "modularity",
    "modularity_matrix",
    "pairs_from_partition",
    "parse_edge_list",
    "partition_from_pairs",
    "perturb_for_right_cut",
    "perturb_pairs",
    "run_solve",
    "select_triple",
    "separating_set",
    "solve",
    "solve_lp_relaxation",
    "write_lp_text",
]
