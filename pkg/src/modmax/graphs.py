"""Weighted undirected graphs with self-loops, modularity, and contraction.

Conventions used throughout the package:

* node ids are contiguous ``0..n-1``; original input labels ride along in
  ``node_labels`` for reporting;
* a self-loop of weight ``w`` adds ``2w`` to its node's degree and ``w`` to
  the total weight ``m`` (this keeps modularity invariant under
  contraction);
* parallel edges are summed at construction time, the same normalization
  contraction relies on.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from .partitions import Partition

Label = "int | str"

_HEADER_RE = re.compile(r"^n\s*=\s*(\d+)$")
_INT_TOKEN = re.compile(r"[+-]?\d+")


class EdgeListParseError(ValueError):
    """Malformed edge-list input; carries the offending 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class GraphError(ValueError):
    """Invalid graph data, or an operation undefined for this graph."""


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on node ids ``0..n-1``.

    ``edges`` is normalized: endpoints ordered ``i <= j``, no duplicates,
    strictly positive weights. Instances are immutable and safe to share
    across workers.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    node_labels: tuple | None = None

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("node count must be nonnegative")
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            if not w > 0:
                raise GraphError(f"edge ({i}, {j}) has nonpositive weight {w}")
            if (i, j) in seen:
                raise GraphError(f"duplicate edge ({i}, {j}) after normalization")
            seen.add((i, j))
        if self.node_labels is not None and len(self.node_labels) != self.n:
            raise GraphError("node_labels length does not match n")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int, float]],
        node_labels: Sequence | None = None,
    ) -> "Graph":
        """Build a graph, summing parallel edges and ordering endpoints."""
        acc: dict[tuple[int, int], float] = {}
        for i, j, w in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
            if not w > 0:
                raise GraphError(f"edge ({i}, {j}) has nonpositive weight {w}")
            key = (i, j) if i <= j else (j, i)
            acc[key] = acc.get(key, 0.0) + float(w)
        norm = tuple((i, j, acc[(i, j)]) for (i, j) in sorted(acc))
        labels = tuple(node_labels) if node_labels is not None else None
        return cls(n=n, edges=norm, node_labels=labels)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        for i, j, w in self.edges:
            if i == j:
                d[i] += 2.0 * w
            else:
                d[i] += w
                d[j] += w
        d.flags.writeable = False
        return d

    @property
    def two_m(self) -> float:
        return float(self.degrees.sum())

    @property
    def total_weight(self) -> float:
        """Total edge weight m (self-loops counted once)."""
        return self.two_m / 2.0

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency; the diagonal holds twice the loop weight
        so that row sums equal degrees."""
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            if i == j:
                a[i, i] += 2.0 * w
            else:
                a[i, j] += w
                a[j, i] += w
        a.flags.writeable = False
        return a

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Simple adjacency lists (self-loops dropped), sorted ascending."""
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for i, j, _ in self.edges:
            if i != j:
                adj[i].add(j)
                adj[j].add(i)
        return tuple(tuple(sorted(s)) for s in adj)

    def label_of(self, v: int):
        return self.node_labels[v] if self.node_labels is not None else v


def degrees(g: Graph) -> np.ndarray:
    """Weighted degrees d_i; a self-loop counts twice. sum(d) = 2m."""
    return g.degrees.copy()


@dataclass(frozen=True)
class ModularityMatrix:
    """Symmetric gain matrix b_ij = a_ij - gamma * d_i d_j / 2m."""

    values: np.ndarray
    gamma: float
    two_m: float

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def partition_value(self, labels: Sequence[int] | np.ndarray) -> float:
        """(1/2m) * sum of b_ij over ordered same-community pairs (incl. diagonal)."""
        lab = np.asarray(labels)
        total = 0.0
        for c in np.unique(lab):
            idx = np.flatnonzero(lab == c)
            total += float(self.values[np.ix_(idx, idx)].sum())
        return total / self.two_m


def modularity_matrix(g: Graph, gamma: float, two_m: float | None = None) -> ModularityMatrix:
    """Modularity matrix of ``g`` at resolution ``gamma``.

    ``two_m`` overrides the normalization total; the override is what keeps
    per-component subproblems of a larger graph consistent with the whole.
    """
    if gamma < 0:
        raise GraphError(f"resolution parameter must be nonnegative, got {gamma}")
    tm = g.two_m if two_m is None else float(two_m)
    if tm <= 0:
        raise GraphError("modularity undefined for 2m = 0")
    d = g.degrees
    b = g.adjacency - gamma * np.outer(d, d) / tm
    b.flags.writeable = False
    return ModularityMatrix(values=b, gamma=float(gamma), two_m=tm)


def modularity(
    g: Graph,
    partition: "Partition | Sequence[int]",
    gamma: float = 1.0,
    two_m: float | None = None,
) -> float:
    """Modularity Q of a partition of ``g`` at resolution ``gamma``."""
    labels = partition.labels if isinstance(partition, Partition) else tuple(partition)
    if len(labels) != g.n:
        raise GraphError(f"partition has {len(labels)} labels for a graph with n={g.n}")
    return modularity_matrix(g, gamma, two_m).partition_value(labels)


@dataclass(frozen=True)
class ContractionMap:
    """Surjective map from parent node ids onto contracted (child) node ids."""

    parent_size: int
    assignment: tuple[int, ...]

    def __post_init__(self):
        if len(self.assignment) != self.parent_size:
            raise GraphError("assignment length does not match parent_size")
        image = set(self.assignment)
        size = max(image) + 1 if image else 0
        if image != set(range(size)):
            raise GraphError("assignment must map onto a contiguous 0-based range")

    @property
    def child_size(self) -> int:
        return max(self.assignment) + 1 if self.assignment else 0

    @classmethod
    def identity(cls, n: int) -> "ContractionMap":
        return cls(n, tuple(range(n)))

    def compose(self, later: "ContractionMap") -> "ContractionMap":
        """Map parent ids through ``self`` then ``later``."""
        if later.parent_size != self.child_size:
            raise GraphError("composition size mismatch")
        return ContractionMap(
            self.parent_size, tuple(later.assignment[c] for c in self.assignment)
        )

    def lift(self, child_values: Sequence) -> tuple:
        """Pull per-child-node values back to parent nodes."""
        if len(child_values) != self.child_size:
            raise GraphError("child value vector has wrong length")
        return tuple(child_values[c] for c in self.assignment)


def contract(g: Graph, merge_set: Iterable[int]) -> tuple[Graph, ContractionMap]:
    """Merge ``merge_set`` into one supernode.

    Edges to outside neighbors are summed; edges internal to the merge set
    (each counted once, self-loops once) become the supernode's self-loop.
    Total weight 2m and the degrees of untouched nodes are preserved.
    """
    ms = set(merge_set)
    if not ms:
        raise GraphError("merge set must be nonempty")
    for v in ms:
        if not (0 <= v < g.n):
            raise GraphError(f"merge set id {v} out of range for n={g.n}")
    rep = min(ms)
    survivors = sorted((set(range(g.n)) - ms) | {rep})
    new_id = {old: k for k, old in enumerate(survivors)}
    assignment = tuple(new_id[v if v not in ms else rep] for v in range(g.n))
    cmap = ContractionMap(g.n, assignment)
    edges = ((assignment[i], assignment[j], w) for i, j, w in g.edges)
    labels = (
        tuple(g.node_labels[v] for v in survivors) if g.node_labels is not None else None
    )
    return Graph.from_edges(len(survivors), edges, labels), cmap


def connected_components(g: Graph) -> list[list[int]]:
    """Components as sorted node lists, ordered by smallest member."""
    seen = [False] * g.n
    comps: list[list[int]] = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        comp = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for u in g.neighbors[v]:
                if not seen[u]:
                    seen[u] = True
                    comp.append(u)
                    queue.append(u)
        comps.append(sorted(comp))
    return comps


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> tuple[Graph, tuple[int, ...]]:
    """Subgraph on ``nodes`` with compacted ids; returns (graph, original ids)."""
    keep = sorted(set(nodes))
    for v in keep:
        if not (0 <= v < g.n):
            raise GraphError(f"node {v} out of range for n={g.n}")
    new_id = {old: k for k, old in enumerate(keep)}
    edges = (
        (new_id[i], new_id[j], w)
        for i, j, w in g.edges
        if i in new_id and j in new_id
    )
    labels = tuple(g.label_of(v) for v in keep)
    return Graph.from_edges(len(keep), edges, labels), tuple(keep)


def largest_connected_component(g: Graph) -> tuple[Graph, tuple[int, ...]]:
    """Largest component; ties broken by smallest minimum node id."""
    if g.n == 0:
        raise GraphError("empty graph has no components")
    comps = connected_components(g)
    best = max(comps, key=lambda c: (len(c), -c[0]))
    return induced_subgraph(g, best)


def parse_edge_list(
    text: "str | IO[str]",
    weighted: bool = False,
    fmt: str = "edgelist",
) -> Graph:
    """Parse whitespace-separated edge lines into a :class:`Graph`.

    Lines starting with ``#`` are comments. An optional ``n=<count>`` header
    declares the node count so isolated nodes survive the round trip; with a
    header, node tokens must be integers in ``[0, n)``. Without one, node
    tokens may be arbitrary and are remapped to contiguous 0-based ids
    (sorted numerically when every token is an integer). Duplicate edges are
    summed. ``fmt="pairs"`` forbids the weight column.
    """
    if fmt not in ("edgelist", "pairs"):
        raise EdgeListParseError(f"unknown format {fmt!r}")
    lines = text.splitlines() if isinstance(text, str) else list(text)

    declared_n: int | None = None
    raw: list[tuple] = []  # (label_i, label_j, weight, lineno)
    for lineno, rawline in enumerate(lines, start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        header = _HEADER_RE.match(line)
        if header:
            if declared_n is not None:
                raise EdgeListParseError("duplicate node-count header", lineno)
            if raw:
                raise EdgeListParseError("node-count header must precede edges", lineno)
            declared_n = int(header.group(1))
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3) or (fmt == "pairs" and len(tokens) != 2):
            raise EdgeListParseError(
                f"expected {'2' if fmt == 'pairs' else '2 or 3'} tokens, got {len(tokens)}",
                lineno,
            )
        w = 1.0
        if len(tokens) == 3 and weighted:
            try:
                w = float(tokens[2])
            except ValueError:
                raise EdgeListParseError(f"bad weight {tokens[2]!r}", lineno) from None
            if not w > 0:
                raise EdgeListParseError(f"nonpositive weight {w}", lineno)
        raw.append((tokens[0], tokens[1], w, lineno))

    all_int = all(
        _INT_TOKEN.fullmatch(t) for (a, b, _, _) in raw for t in (a, b)
    )
    if declared_n is not None:
        if not all_int:
            raise EdgeListParseError(
                "node-count header requires integer node ids in [0, n)"
            )
        n = declared_n
        labels: list = list(range(n))
        edges = []
        for a, b, w, lineno in raw:
            i, j = int(a), int(b)
            if not (0 <= i < n and 0 <= j < n):
                raise EdgeListParseError(
                    f"node id outside declared range [0, {n})", lineno
                )
            edges.append((i, j, w))
        return Graph.from_edges(n, edges, labels)

    tokens = {t for (a, b, _, _) in raw for t in (a, b)}
    if all_int:
        labels = sorted(int(t) for t in tokens)
        index = {str(lbl): k for k, lbl in enumerate(labels)}
    else:
        labels = sorted(tokens)
        index = {lbl: k for k, lbl in enumerate(labels)}
    edges = [(index[a], index[b], w) for a, b, w, _ in raw]
    return Graph.from_edges(len(labels), edges, labels)
