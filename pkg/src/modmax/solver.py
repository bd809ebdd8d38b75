"""Branch-and-cut search for guaranteed maximum-modularity partitions.

Each tree node carries a contracted graph plus the cuts accumulated on its
path. Bounding solves the node's LP relaxation (upper bound) and runs the
gain-matrix local search on a perturbed modularity matrix (lower bound,
always re-evaluated on the unmodified graph). Branching picks a triple whose
pair sums violate both disjuncts (all-together / at-least-two-separated):
the left child contracts the triple, the right child adds the separation
cut. Convergence of incumbent and best bound certifies global optimality;
an optimality-gap tolerance or a time limit yields the approximate mode.

Disconnected inputs are solved per component against the global 2m and the
results concatenated; cross-component merges can never improve modularity.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .graphs import (
    ContractionMap,
    Graph,
    GraphError,
    connected_components,
    contract,
    induced_subgraph,
    modularity,
    modularity_matrix,
)
from .heuristic import GainMatrix, HeuristicConfig, maximize_gain, perturb_for_right_cut, perturb_pairs
from .ipmodel import (
    INTEGRALITY_TOL,
    BranchState,
    LpSolution,
    SparseModel,
    build_sparse_model,
    find_violated_triples,
    solution_partition,
    solve_lp_relaxation,
    violated_triangle_triples,
)
from .lp import LpBackend
from .partitions import Partition

BOUND_TOL = 1e-9  # slack when pruning against the incumbent
CERTIFICATE_TOL = 1e-6  # relative gap certified as proven optimality
EXACT_STOP_TOL = 1e-9  # relative gap at which the exact search stops
SNAP_TOL = 1e-12  # bound residue considered pure float noise; any two distinct
# modularity values at this scale differ by far more, so a fathomed node whose
# bound sits within SNAP_TOL of the incumbent is recorded at the incumbent
# (otherwise 1e-16 summation-path noise poisons the relative gap near Q = 0)


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class TerminationCriteria:
    mode: str = "exact"  # "exact" | "approximate"
    gap_tolerance: float = 0.0
    time_limit_s: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "approximate"):
            raise SolverError(f"unknown mode {self.mode!r}")
        if self.gap_tolerance < 0:
            raise SolverError("gap_tolerance must be nonnegative")
        if self.mode == "exact" and self.gap_tolerance > CERTIFICATE_TOL:
            raise SolverError("exact mode requires gap_tolerance = 0")
        if self.time_limit_s is not None and not self.time_limit_s > 0:
            raise SolverError("time_limit_s must be positive")


@dataclass
class SolveStats:
    nodes_explored: int = 0
    fathomed_integer: int = 0
    fathomed_infeasible: int = 0
    fathomed_bound: int = 0
    lp_solves: int = 0
    heuristic_runs: int = 0
    levels: int = 0
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class ProgressRow:
    level: int
    open_nodes: int
    incumbent: float
    best_bound: float
    gap: float
    elapsed_s: float


@dataclass
class SolveReport:
    partition: Partition
    modularity: float
    best_bound: float
    gap: float
    proven_optimal: bool
    stats: SolveStats
    termination_reason: str  # "optimal" | "gap_tolerance" | "time_limit"


@dataclass
class TreeNode:
    id: int
    depth: int
    state: BranchState
    graph: Graph
    to_original: ContractionMap  # component ids -> contracted ids
    upper_bound: float = np.inf  # parent's bound until the node's own LP runs
    lower_bound: float = -np.inf
    lb_partition: Partition | None = None
    lp_x: np.ndarray | None = None
    status: str = "open"  # open | fathomed | branched
    fathom_reason: str | None = None


def gap(incumbent: float, best_bound: float) -> float:
    """Relative incumbent/best-bound gap, clamped below at zero."""
    if best_bound == np.inf:
        return np.inf
    return max(0.0, (best_bound - incumbent) / max(abs(best_bound), 1e-12))


def select_triple(candidates: Sequence[tuple[tuple[int, int, int], float]]) -> tuple[int, int, int]:
    """Pick the branching triple: maximum violation score, ties lexicographic."""
    if not candidates:
        raise SolverError("no violated triples to branch on")
    return min(candidates, key=lambda ts: (-ts[1], ts[0]))[0]


def fathom_check(node: TreeNode, incumbent_value: float) -> str | None:
    """Why a bounded node is closed: ``integer``, ``infeasible``, ``bound``,
    or ``None`` to keep exploring it."""
    if node.state.infeasible or node.upper_bound == -np.inf:
        return "infeasible"
    if node.lp_x is not None and _is_integral(node.lp_x):
        return "integer"
    if node.upper_bound <= incumbent_value + BOUND_TOL:
        return "bound"
    return None


def _is_integral(x: np.ndarray) -> bool:
    return bool(np.abs(x - np.round(x)).max(initial=0.0) <= INTEGRALITY_TOL)


def branch_on_triple(
    node: TreeNode, triple: tuple[int, int, int], next_id: Iterator[int]
) -> tuple[TreeNode, TreeNode]:
    """Split a node's feasible partitions on a triple.

    Left child: the triple is contracted into a supernode (all together);
    prior cuts are remapped into the new id space. Right child: same graph
    with the at-least-two-separated cut appended. Together the children
    cover exactly the parent's feasible partitions.
    """
    i, j, k = triple
    if len({i, j, k}) != 3 or not all(0 <= v < node.graph.n for v in (i, j, k)):
        raise SolverError(f"triple {triple} invalid in a graph with n={node.graph.n}")
    merged, cmap = contract(node.graph, {i, j, k})
    left = TreeNode(
        id=next(next_id),
        depth=node.depth + 1,
        state=node.state.remap(cmap),
        graph=merged,
        to_original=node.to_original.compose(cmap),
        upper_bound=node.upper_bound,
    )
    right = TreeNode(
        id=next(next_id),
        depth=node.depth + 1,
        state=node.state.with_right_cut(triple),
        graph=node.graph,
        to_original=node.to_original,
        upper_bound=node.upper_bound,
    )
    return left, right


def branch_on_pair(
    node: TreeNode, pair: tuple[int, int], next_id: Iterator[int]
) -> tuple[TreeNode, TreeNode]:
    """Fallback pair disjunction: merge i, j versus separate them."""
    i, j = pair
    merged, cmap = contract(node.graph, {i, j})
    left = TreeNode(
        id=next(next_id),
        depth=node.depth + 1,
        state=node.state.remap(cmap),
        graph=merged,
        to_original=node.to_original.compose(cmap),
        upper_bound=node.upper_bound,
    )
    right = TreeNode(
        id=next(next_id),
        depth=node.depth + 1,
        state=node.state.with_separated_pair(pair),
        graph=node.graph,
        to_original=node.to_original,
        upper_bound=node.upper_bound,
    )
    return left, right


class _ComponentSearch:
    """Level-synchronized best-first branch-and-cut over one connected component."""

    def __init__(
        self,
        graph: Graph,
        original_ids: tuple[int, ...],
        gamma: float,
        two_m: float,
        cfg: HeuristicConfig,
        delta: float,
        backend: LpBackend | None,
        stats: SolveStats,
        node_ids: Iterator[int],
        workers: int,
        separation: bool,
        dense_model: bool = False,
    ):
        self.graph = graph
        self.original_ids = original_ids
        self.gamma = gamma
        self.two_m = two_m
        self.cfg = cfg
        self.delta = delta
        self.backend = backend
        self.stats = stats
        self.node_ids = node_ids
        self.workers = workers
        self.separation = separation
        self.dense_model = dense_model
        self._b = modularity_matrix(graph, gamma, two_m)
        self._models: dict = {}
        self.incumbent_value = -np.inf
        self.incumbent_partition: Partition | None = None
        self.best_bound = np.inf
        self._ceiling = -np.inf  # max upper bound among fathomed nodes
        self.frontier: list[TreeNode] = []
        self.done = False

    # -- bookkeeping ------------------------------------------------------

    def evaluate(self, labels) -> float:
        """True modularity contribution of a partition of this component."""
        return self._b.partition_value(labels)

    def _model_for(self, graph: Graph) -> SparseModel:
        key = (graph.n, graph.edges)
        model = self._models.get(key)
        if model is None:
            model = build_sparse_model(graph, self.gamma, two_m=self.two_m, dense=self.dense_model)
            self._models[key] = model
        return model

    def _offer_incumbent(self, value: float, partition: Partition) -> None:
        # strict improvement only, so equal-value ties keep the first found
        if value > self.incumbent_value:
            self.incumbent_value = value
            self.incumbent_partition = partition

    def _fathom(self, node: TreeNode, reason: str) -> None:
        node.status = "fathomed"
        node.fathom_reason = reason
        if reason == "integer":
            self.stats.fathomed_integer += 1
        elif reason == "infeasible":
            self.stats.fathomed_infeasible += 1
        else:
            self.stats.fathomed_bound += 1
        if node.upper_bound not in (np.inf, -np.inf):
            ceiling = node.upper_bound
            if ceiling - self.incumbent_value <= SNAP_TOL:
                ceiling = min(ceiling, self.incumbent_value)
            self._ceiling = max(self._ceiling, ceiling)

    def _update_best_bound(self) -> None:
        # max over open nodes plus everything already closed; min() keeps the
        # published bound non-increasing even under float jitter
        current = max(
            [self.incumbent_value, self._ceiling]
            + [nd.upper_bound for nd in self.frontier]
        )
        self.best_bound = min(self.best_bound, current)
        if not self.frontier:
            self.done = True

    @property
    def gap_width(self) -> float:
        return self.best_bound - self.incumbent_value

    # -- bounding ---------------------------------------------------------

    def _bound_compute(self, node: TreeNode):
        """Pure bounding work for one node; safe to run concurrently."""
        if node.state.infeasible:
            return LpSolution("infeasible", -np.inf, None), None, -np.inf, None, -np.inf
        model = self._model_for(node.graph)
        sol = solve_lp_relaxation(model, node.state, self.backend)
        if sol.status == "infeasible":
            return sol, None, -np.inf, None, -np.inf

        closure_partition = None
        closure_value = -np.inf
        if sol.is_integral:
            local = solution_partition(sol.x, node.graph.n)
            closure_partition = Partition.from_labels(node.to_original.lift(local.labels))
            closure_value = self.evaluate(closure_partition.labels)

        # Lower bound: local search guided by the delta-perturbed matrix; the
        # returned partition is re-evaluated on the unmodified graph, so the
        # recorded bound is a true modularity even when the partition ignores
        # the right cuts.
        gm = GainMatrix.from_modularity(modularity_matrix(node.graph, self.gamma, self.two_m))
        for cut in node.state.right_cut_triples:
            gm = perturb_for_right_cut(gm, cut, self.delta)
        if node.state.separated_pairs:
            gm = perturb_pairs(gm, node.state.separated_pairs, self.delta)
        local, _ = maximize_gain(gm, self.cfg)
        heur_partition = Partition.from_labels(node.to_original.lift(local.labels))
        heur_value = self.evaluate(heur_partition.labels)
        return sol, closure_partition, closure_value, heur_partition, heur_value

    def _bound_apply(self, node: TreeNode, computed) -> None:
        sol, closure_partition, closure_value, heur_partition, heur_value = computed
        self.stats.nodes_explored += 1
        if not node.state.infeasible:
            self.stats.lp_solves += 1
        node.lp_x = sol.x
        if sol.status == "optimal":
            node.upper_bound = min(sol.objective_value, node.upper_bound)
        else:
            node.upper_bound = -np.inf
        if closure_partition is not None:
            self._offer_incumbent(closure_value, closure_partition)
        if heur_partition is not None:
            self.stats.heuristic_runs += 1
            node.lower_bound = heur_value
            node.lb_partition = heur_partition
            self._offer_incumbent(heur_value, heur_partition)
        reason = fathom_check(node, self.incumbent_value)
        if reason is not None:
            self._fathom(node, reason)
        else:
            assert node.lower_bound <= node.upper_bound + 1e-6

    def root(self) -> None:
        node = TreeNode(
            id=next(self.node_ids),
            depth=0,
            state=BranchState(),
            graph=self.graph,
            to_original=ContractionMap.identity(self.graph.n),
        )
        self._bound_apply(node, self._bound_compute(node))
        self.frontier = [node] if node.status == "open" else []
        self._update_best_bound()

    # -- branching --------------------------------------------------------

    def _separate_once(self, node: TreeNode, model: SparseModel) -> bool:
        """Add the triangle inequalities violated by the node's LP point and
        re-solve; returns False when the point is triangle-feasible or every
        violated inequality is already in the model (borderline tolerance
        noise), which would otherwise loop without progress."""
        cuts = violated_triangle_triples(node.lp_x, node.graph.n)
        known = set(model.triples) | set(node.state.extra_triangle_triples)
        cuts = [t for t in cuts if t not in known]
        if not cuts:
            return False
        node.state = node.state.with_extra_triangles(cuts)
        sol = solve_lp_relaxation(model, node.state, self.backend)
        self.stats.lp_solves += 1
        if sol.status == "infeasible":
            node.upper_bound = -np.inf
            node.lp_x = None
            self._fathom(node, "infeasible")
            return True
        node.lp_x = sol.x
        node.upper_bound = min(node.upper_bound, sol.objective_value)
        if sol.is_integral:
            local = solution_partition(sol.x, node.graph.n)
            lifted = Partition.from_labels(node.to_original.lift(local.labels))
            self._offer_incumbent(self.evaluate(lifted.labels), lifted)
            self._fathom(node, "integer")
        elif node.upper_bound <= self.incumbent_value + BOUND_TOL:
            self._fathom(node, "bound")
        return True

    def _branch(self, node: TreeNode) -> list[TreeNode]:
        model = self._model_for(node.graph)
        while node.status == "open":
            if self.separation and self._separate_once(node, model):
                continue
            candidates = find_violated_triples(node.lp_x, node.graph.n)
            if candidates:
                triple = select_triple(candidates)
                children = branch_on_triple(node, triple, self.node_ids)
                node.status = "branched"
                return list(children)
            if self._separate_once(node, model):
                continue
            # Disjunction- and triangle-feasible yet fractional: fall back to
            # a pair disjunction on the most fractional variable.
            x = node.lp_x
            frac = np.flatnonzero((x > INTEGRALITY_TOL) & (x < 1.0 - INTEGRALITY_TOL))
            if frac.size == 0:
                local = solution_partition(x, node.graph.n)
                lifted = Partition.from_labels(node.to_original.lift(local.labels))
                self._offer_incumbent(self.evaluate(lifted.labels), lifted)
                self._fathom(node, "integer")
                break
            idx = int(frac[np.argmin(np.abs(x[frac] - 0.5))])
            pair = list(itertools.combinations(range(node.graph.n), 2))[idx]
            children = branch_on_pair(node, pair, self.node_ids)
            node.status = "branched"
            return list(children)
        return []

    def step_level(self, deadline: float | None) -> None:
        """Branch every open frontier node (largest bound first), then bound
        all their children before descending further."""
        order = sorted(self.frontier, key=lambda nd: (-nd.upper_bound, nd.id))
        children: list[TreeNode] = []
        leftover: list[TreeNode] = []
        for pos, node in enumerate(order):
            if deadline is not None and time.perf_counter() >= deadline:
                leftover = order[pos:]  # interrupted nodes stay open
                break
            if node.upper_bound <= self.incumbent_value + BOUND_TOL:
                self._fathom(node, "bound")
                continue
            children.extend(self._branch(node))

        if self.workers > 1 and len(children) > 1:
            pending = children
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(self._bound_compute, pending))
        else:
            pending = []
            results = []
            for child in children:
                if deadline is not None and time.perf_counter() >= deadline:
                    break  # unbounded children keep the parent's (valid) bound
                pending.append(child)
                results.append(self._bound_compute(child))
        for child, computed in zip(pending, results):
            self._bound_apply(child, computed)

        self.frontier = leftover + [c for c in children if c.status == "open"]
        self.stats.levels += 1
        self._update_best_bound()


def solve(
    g: Graph,
    gamma: float = 1.0,
    criteria: TerminationCriteria | None = None,
    cfg: HeuristicConfig | None = None,
    delta: float | None = None,
    *,
    workers: int = 1,
    backend: LpBackend | None = None,
    separation: bool = False,
    dense_model: bool = False,
    progress: Callable[[ProgressRow], None] | None = None,
) -> SolveReport:
    """Maximize modularity exactly, or within a reported optimality gap.

    Exact mode terminates when incumbent and best bound converge; the
    returned partition then attains the maximum and ``proven_optimal`` is
    set. Approximate mode stops at ``gap_tolerance`` or the time limit with
    a truthful gap. The incumbent is never empty: the root heuristic always
    provides a partition.
    """
    start = time.perf_counter()
    criteria = criteria or TerminationCriteria()
    cfg = cfg or HeuristicConfig()
    if g.two_m <= 0:
        raise GraphError("modularity undefined for 2m = 0")
    if gamma < 0:
        raise GraphError(f"resolution parameter must be nonnegative, got {gamma}")
    two_m = g.two_m
    if delta is None:
        delta = 2.0 / two_m
    if not delta > 0:
        raise SolverError("delta must be positive")
    if workers < 1:
        raise SolverError("workers must be at least 1")
    deadline = start + criteria.time_limit_s if criteria.time_limit_s else None

    stats = SolveStats()
    node_ids = itertools.count()
    searches: list[_ComponentSearch] = []
    singles: list[tuple[int, float]] = []  # (original node id, Q contribution)
    for comp in connected_components(g):
        sub, orig = induced_subgraph(g, comp)
        if sub.n == 1:
            value = modularity_matrix(sub, gamma, two_m).partition_value((0,))
            singles.append((orig[0], value))
        else:
            searches.append(
                _ComponentSearch(
                    sub, orig, gamma, two_m, cfg, delta, backend, stats,
                    node_ids, workers, separation, dense_model,
                )
            )

    for search in searches:
        search.root()  # always bounded so the report is never empty

    singles_value = float(sum(v for _, v in singles))

    def totals() -> tuple[float, float]:
        inc = singles_value + sum(s.incumbent_value for s in searches)
        bound = singles_value + sum(s.best_bound for s in searches)
        return inc, bound

    def emit(level: int) -> None:
        if progress is None:
            return
        inc, bound = totals()
        progress(
            ProgressRow(
                level=level,
                open_nodes=sum(len(s.frontier) for s in searches),
                incumbent=inc,
                best_bound=bound,
                gap=gap(inc, bound),
                elapsed_s=time.perf_counter() - start,
            )
        )

    emit(0)
    level = 0
    exact_stop = max(EXACT_STOP_TOL, criteria.gap_tolerance)
    while True:
        inc, bound = totals()
        current_gap = gap(inc, bound)
        if all(s.done for s in searches):
            reason = "optimal"
            break
        if criteria.mode == "approximate" and current_gap <= criteria.gap_tolerance:
            reason = "gap_tolerance"
            break
        if criteria.mode == "exact" and current_gap <= exact_stop:
            reason = "optimal"
            break
        if deadline is not None and time.perf_counter() >= deadline:
            reason = "time_limit"
            break
        active = max(
            (s for s in searches if not s.done),
            key=lambda s: s.gap_width,
        )
        active.step_level(deadline)
        level += 1
        emit(level)

    labels = np.empty(g.n, dtype=np.int64)
    offset = 0
    for node_id, _ in singles:
        labels[node_id] = offset
        offset += 1
    for search in searches:
        part = search.incumbent_partition
        assert part is not None
        for local, orig in enumerate(search.original_ids):
            labels[orig] = offset + part.labels[local]
        offset += part.k
    partition = Partition.from_labels(labels.tolist())

    value = modularity(g, partition, gamma)
    inc, bound = totals()
    assert abs(value - inc) <= 1e-9
    final_gap = gap(value, bound)
    stats.wall_time_s = time.perf_counter() - start
    return SolveReport(
        partition=partition,
        modularity=value,
        best_bound=bound,
        gap=final_gap,
        proven_optimal=final_gap <= CERTIFICATE_TOL,
        stats=stats,
        termination_reason=reason,
    )
