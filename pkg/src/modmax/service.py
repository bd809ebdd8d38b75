"""HTTP service wrapping the solver.

Endpoints mirror the CLI report schema exactly (same runner underneath):

* ``POST /solve``       solve an inline edge list
* ``POST /ami``         AMI similarity of two labelings
* ``POST /modularity``  evaluate Q for a given partition
* ``GET  /health``      liveness and version

Run with ``uvicorn modmax.service:app``.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .graphs import Graph, GraphError, modularity
from .heuristic import HeuristicError
from .partitions import PartitionError, ami
from .runner import SolveOptions, run_solve
from .solver import SolverError

NodeId = Union[int, str]
EdgeInput = Union[tuple[NodeId, NodeId], tuple[NodeId, NodeId, float]]


class SolveRequest(BaseModel):
    edges: list[EdgeInput] = Field(min_length=1)
    gamma: float = 1.0
    mode: Literal["exact", "approximate", "heuristic"] = "exact"
    gap_tolerance: float = 0.0
    time_limit_s: Optional[float] = None
    delta: Optional[float] = None
    seed: int = 0
    restarts: int = 3
    workers: int = 1
    separation: bool = False


class SolveStatsModel(BaseModel):
    nodes_explored: int
    fathomed_integer: int
    fathomed_infeasible: int
    fathomed_bound: int
    lp_solves: int
    heuristic_runs: int
    levels: int
    wall_time_s: float


class SolveResponse(BaseModel):
    n: int
    m: float
    gamma: float
    mode: str
    seed: int
    modularity: float
    best_bound: Optional[float]
    gap: Optional[float]
    proven_optimal: bool
    communities: list[list[NodeId]]
    termination_reason: str
    runtime_s: float
    stats: SolveStatsModel


class AmiRequest(BaseModel):
    labels_a: list[NodeId]
    labels_b: list[NodeId]
    average_method: Literal["arithmetic", "max", "min", "geometric"] = "arithmetic"


class AmiResponse(BaseModel):
    ami: float


class ModularityRequest(BaseModel):
    edges: list[EdgeInput] = Field(min_length=1)
    communities: list[list[NodeId]]
    gamma: float = 1.0


class ModularityResponse(BaseModel):
    modularity: float


def graph_from_edges(edges: list[EdgeInput]) -> Graph:
    """Build a graph from (i, j[, w]) tuples, preserving the given ids as labels."""
    seen: dict = {}
    raw = []
    for entry in edges:
        i, j = entry[0], entry[1]
        w = float(entry[2]) if len(entry) == 3 else 1.0
        for v in (i, j):
            if v not in seen:
                seen[v] = None
        raw.append((i, j, w))
    try:
        labels = sorted(seen, key=lambda v: (isinstance(v, str), v))
    except TypeError:
        labels = sorted(seen, key=str)
    index = {lbl: k for k, lbl in enumerate(labels)}
    return Graph.from_edges(
        len(labels), [(index[i], index[j], w) for i, j, w in raw], labels
    )


app = FastAPI(title="modmax", version=__version__)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/solve", response_model=SolveResponse)
def solve_endpoint(request: SolveRequest) -> SolveResponse:
    try:
        graph = graph_from_edges(request.edges)
        options = SolveOptions(
            gamma=request.gamma,
            mode=request.mode,
            gap_tolerance=request.gap_tolerance,
            time_limit_s=request.time_limit_s,
            delta=request.delta,
            seed=request.seed,
            restarts=request.restarts,
            workers=request.workers,
            separation=request.separation,
        )
        report = run_solve(graph, options)
    except (GraphError, SolverError, HeuristicError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return SolveResponse(**report)


@app.post("/ami", response_model=AmiResponse)
def ami_endpoint(request: AmiRequest) -> AmiResponse:
    try:
        value = ami(request.labels_a, request.labels_b, request.average_method)
    except PartitionError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return AmiResponse(ami=value)


@app.post("/modularity", response_model=ModularityResponse)
def modularity_endpoint(request: ModularityRequest) -> ModularityResponse:
    try:
        graph = graph_from_edges(request.edges)
        index = {graph.label_of(v): v for v in range(graph.n)}
        labels = [0] * graph.n
        assigned = set()
        for cid, comm in enumerate(request.communities):
            for node in comm:
                if node not in index:
                    raise GraphError(f"community node {node!r} not in the edge list")
                if node in assigned:
                    raise GraphError(f"node {node!r} assigned to two communities")
                assigned.add(node)
                labels[index[node]] = cid
        if len(assigned) != graph.n:
            raise GraphError("communities must cover every node")
        value = modularity(graph, labels, request.gamma)
    except GraphError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return ModularityResponse(modularity=value)
