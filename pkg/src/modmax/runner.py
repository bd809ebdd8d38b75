"""Shared execution layer behind the CLI and the HTTP service.

Both front ends build a :class:`SolveOptions`, call :func:`run_solve`, and
emit the returned dict verbatim, which is what keeps their reports equal
field for field.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Callable

from .graphs import Graph
from .heuristic import HeuristicConfig, heuristic_modularity
from .partitions import Partition
from .solver import ProgressRow, SolveStats, TerminationCriteria, solve

MODES = ("exact", "approximate", "heuristic")


@dataclass(frozen=True)
class SolveOptions:
    gamma: float = 1.0
    mode: str = "exact"
    gap_tolerance: float = 0.0
    time_limit_s: float | None = None
    delta: float | None = None
    seed: int = 0
    restarts: int = 3
    workers: int = 1
    separation: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "approximate" and self.gap_tolerance <= 0 and self.time_limit_s is None:
            raise ValueError(
                "approximate mode requires gap_tolerance > 0 or a time limit"
            )


def _communities_as_labels(graph: Graph, partition: Partition) -> list[list]:
    out: list[list] = [[] for _ in range(partition.k)]
    for node, c in enumerate(partition.labels):
        out[c].append(graph.label_of(node))
    return out


def run_solve(
    graph: Graph,
    options: SolveOptions,
    progress: Callable[[ProgressRow], None] | None = None,
) -> dict:
    """Solve and return the canonical report dict (the CLI/service schema)."""
    cfg = HeuristicConfig(random_seed=options.seed, restarts=options.restarts)
    started = time.perf_counter()
    if options.mode == "heuristic":
        partition, value = heuristic_modularity(graph, options.gamma, cfg)
        elapsed = time.perf_counter() - started
        stats = SolveStats(heuristic_runs=1, wall_time_s=elapsed)
        modularity_value = value
        best_bound = None
        gap_value = None
        proven = False
        reason = "heuristic"
    else:
        criteria = TerminationCriteria(
            mode=options.mode,
            gap_tolerance=options.gap_tolerance,
            time_limit_s=options.time_limit_s,
        )
        report = solve(
            graph,
            gamma=options.gamma,
            criteria=criteria,
            cfg=cfg,
            delta=options.delta,
            workers=options.workers,
            separation=options.separation,
            progress=progress,
        )
        partition = report.partition
        modularity_value = report.modularity
        best_bound = report.best_bound
        gap_value = report.gap
        proven = report.proven_optimal
        reason = report.termination_reason
        stats = report.stats
        elapsed = time.perf_counter() - started

    return {
        "n": graph.n,
        "m": graph.total_weight,
        "gamma": options.gamma,
        "mode": options.mode,
        "seed": options.seed,
        "modularity": modularity_value,
        "best_bound": best_bound,
        "gap": gap_value,
        "proven_optimal": proven,
        "communities": _communities_as_labels(graph, partition),
        "termination_reason": reason,
        "runtime_s": elapsed,
        "stats": dataclasses.asdict(stats),
    }
