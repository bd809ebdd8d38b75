"""Sparse clique-partitioning model for modularity maximization.

One binary variable x_ij per node pair (0 = same community). Triangular
constraints x_ik + x_jk >= x_ij are generated only for triples drawn from
minimum-cardinality vertex separators K(i, j) (plus an all-third-nodes
fallback for adjacent pairs), which keeps the constraint count near O(n^2)
while preserving the optimum. LP relaxations of the model, under the cuts
accumulated by the search tree, provide the upper bounds.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .graphs import ContractionMap, Graph, GraphError, connected_components, modularity_matrix
from .lp import DEFAULT_BACKEND, LpBackend, LpResult
from .partitions import PairAssignment, Partition, partition_from_pairs

INTEGRALITY_TOL = 1e-6
VIOLATION_EPS = 1e-6


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(n: int, i: int, j: int) -> int:
    """Index of pair (i, j), i < j, in lexicographic order."""
    if not 0 <= i < j < n:
        raise ValueError(f"bad pair ({i}, {j}) for n={n}")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def pair_vector_to_matrix(x: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    m[iu] = x
    return m + m.T


class _VertexCutFlow:
    """Min vertex (s, t)-separators via max flow on the node-split digraph.

    Every node v splits into v_in -> v_out joined by a unit-capacity arc;
    graph edges become infinite-capacity arcs between the halves. The cut is
    read off the residual reachability from the source, so ties between
    minimum cuts resolve deterministically given the fixed arc order.
    """

    def __init__(self, g: Graph):
        self.n = g.n
        self.inf = float(g.n + 1)
        nn = 2 * g.n
        self.adj: list[list[int]] = [[] for _ in range(nn)]
        self.to: list[int] = []
        self.base_cap: list[float] = []
        self.split_arc = [0] * g.n
        for v in range(g.n):
            self.split_arc[v] = self._add_arc(2 * v, 2 * v + 1, 1.0)
        for i, j, _ in g.edges:
            if i != j:
                self._add_arc(2 * i + 1, 2 * j, self.inf)
                self._add_arc(2 * j + 1, 2 * i, self.inf)

    def _add_arc(self, u: int, v: int, cap: float) -> int:
        arc = len(self.to)
        self.adj[u].append(arc)
        self.to.append(v)
        self.base_cap.append(cap)
        self.adj[v].append(arc + 1)
        self.to.append(u)
        self.base_cap.append(0.0)
        return arc

    def min_cut(self, s: int, t: int) -> frozenset[int]:
        cap = list(self.base_cap)
        cap[self.split_arc[s]] = self.inf
        cap[self.split_arc[t]] = self.inf
        source, sink = 2 * s + 1, 2 * t
        nn = 2 * self.n
        while True:  # BFS augmenting paths; flow is at most n
            parent_arc = [-1] * nn
            parent_arc[source] = -2
            queue = deque([source])
            while queue:
                u = queue.popleft()
                if u == sink:
                    break
                for arc in self.adj[u]:
                    v = self.to[arc]
                    if cap[arc] > 0 and parent_arc[v] == -1:
                        parent_arc[v] = arc
                        queue.append(v)
            if parent_arc[sink] == -1:
                break
            bottleneck = self.inf
            v = sink
            while v != source:
                arc = parent_arc[v]
                bottleneck = min(bottleneck, cap[arc])
                v = self.to[arc ^ 1]
            v = sink
            while v != source:
                arc = parent_arc[v]
                cap[arc] -= bottleneck
                cap[arc ^ 1] += bottleneck
                v = self.to[arc ^ 1]
        reachable = [False] * nn
        reachable[source] = True
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for arc in self.adj[u]:
                v = self.to[arc]
                if cap[arc] > 0 and not reachable[v]:
                    reachable[v] = True
                    queue.append(v)
        return frozenset(
            v
            for v in range(self.n)
            if reachable[2 * v] and not reachable[2 * v + 1]
        )


def separating_set(g: Graph, i: int, j: int) -> frozenset[int]:
    """K(i, j): a minimum-cardinality vertex set separating i from j.

    Adjacent pairs have no separator; the fallback returns all other nodes
    of their component (a valid superset for constraint generation). Pairs
    in different components need no constraint and get the empty set.
    """
    if i == j:
        raise GraphError("separating set requires two distinct nodes")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise GraphError(f"node pair ({i}, {j}) out of range for n={g.n}")
    comp = next(c for c in connected_components(g) if i in c)
    if j not in comp:
        return frozenset()
    if j in g.neighbors[i]:
        return frozenset(comp) - {i, j}
    return _VertexCutFlow(g).min_cut(i, j)


@dataclass(frozen=True)
class SparseModel:
    """Variables, objective, and triangular-constraint triples.

    The objective reads Q(x) = constant + sum_ij c_ij (1 - x_ij) with
    c_ij = 2 b_ij / 2m and constant = (sum_i b_ii) / 2m. Cross-component
    pairs are presolved to x_ij = 1.
    """

    n: int
    coefficients: np.ndarray
    constant: float
    triples: tuple[tuple[int, int, int], ...]
    presolved_separated: tuple[int, ...]
    gamma: float
    two_m: float

    @property
    def pair_count(self) -> int:
        return pair_count(self.n)

    def pair_index(self, i: int, j: int) -> int:
        return pair_index(self.n, i, j)

    def objective_value(self, x: np.ndarray) -> float:
        return self.constant + float(self.coefficients @ (1.0 - x))

    @cached_property
    def _triangle_rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _triangle_row_arrays(self.n, self.triples, row_offset=0)


def _triangle_row_arrays(n, triples, row_offset):
    """COO arrays for the three rows x_a - x_b - x_c <= 0 of each triple."""
    rows, cols, vals = [], [], []
    r = row_offset
    for i, j, k in triples:
        ij, ik, jk = pair_index(n, i, j), pair_index(n, i, k), pair_index(n, j, k)
        for a, b, c in ((ij, ik, jk), (ik, ij, jk), (jk, ij, ik)):
            rows += (r, r, r)
            cols += (a, b, c)
            vals += (1.0, -1.0, -1.0)
            r += 1
    return (
        np.array(rows, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(vals),
    )


def build_sparse_model(
    g: Graph,
    gamma: float,
    two_m: float | None = None,
    dense: bool = False,
) -> SparseModel:
    """Assemble the model for ``g``; ``dense=True`` uses every triple instead
    of separator-indexed ones (for cross-checking only)."""
    mm = modularity_matrix(g, gamma, two_m)
    n = g.n
    b = mm.values
    iu = np.triu_indices(n, k=1)
    coefficients = 2.0 * b[iu] / mm.two_m
    constant = float(np.trace(b)) / mm.two_m

    comps = connected_components(g)
    comp_of = np.empty(n, dtype=np.int64)
    for cid, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = cid

    triples: set[tuple[int, int, int]] = set()
    if dense:
        triples.update(itertools.combinations(range(n), 3))
    else:
        flow = _VertexCutFlow(g)
        neighbor_sets = [set(adj) for adj in g.neighbors]
        for comp in comps:
            comp_set = set(comp)
            for i, j in itertools.combinations(comp, 2):
                if j in neighbor_sets[i]:
                    separator: Iterable[int] = comp_set - {i, j}
                else:
                    separator = flow.min_cut(i, j)
                for k in separator:
                    triples.add(tuple(sorted((i, j, k))))
        assert 3 * len(triples) <= n * (n - 1) * (n - 2) // 2

    presolved = tuple(
        pair_index(n, i, j)
        for i, j in itertools.combinations(range(n), 2)
        if comp_of[i] != comp_of[j]
    )
    return SparseModel(
        n=n,
        coefficients=coefficients,
        constant=constant,
        triples=tuple(sorted(triples)),
        presolved_separated=presolved,
        gamma=mm.gamma,
        two_m=mm.two_m,
    )


@dataclass(frozen=True)
class BranchState:
    """Cuts accumulated along a search-tree path, in the contracted id space.

    ``right_cut_triples`` carry x_ij + x_ik + x_jk >= 2; ``separated_pairs``
    carry x_ij = 1 (from collapsed triples and pair branching);
    ``extra_triangle_triples`` are lazily separated triangle inequalities.
    """

    right_cut_triples: tuple[tuple[int, int, int], ...] = ()
    separated_pairs: tuple[tuple[int, int], ...] = ()
    extra_triangle_triples: tuple[tuple[int, int, int], ...] = ()
    infeasible: bool = False

    def with_right_cut(self, triple) -> "BranchState":
        t = tuple(sorted(triple))
        return replace(self, right_cut_triples=self.right_cut_triples + (t,))

    def with_separated_pair(self, pair) -> "BranchState":
        p = tuple(sorted(pair))
        return replace(self, separated_pairs=self.separated_pairs + (p,))

    def with_extra_triangles(self, triples) -> "BranchState":
        merged = sorted(set(self.extra_triangle_triples) | {tuple(sorted(t)) for t in triples})
        return replace(self, extra_triangle_triples=tuple(merged))

    def remap(self, cmap: ContractionMap) -> "BranchState":
        """Carry the state through a contraction of the underlying graph.

        A right-cut triple whose members collapse to two nodes degrades to a
        pair cut; full collapse contradicts the cut and marks the state
        infeasible.
        """
        if self.infeasible:
            return self
        a = cmap.assignment
        infeasible = False
        triples: set[tuple[int, int, int]] = set()
        pairs: set[tuple[int, int]] = set()
        for i, j, k in self.right_cut_triples:
            image = sorted({a[i], a[j], a[k]})
            if len(image) == 3:
                triples.add(tuple(image))
            elif len(image) == 2:
                pairs.add(tuple(image))
            else:
                infeasible = True
        for i, j in self.separated_pairs:
            image = sorted({a[i], a[j]})
            if len(image) == 2:
                pairs.add(tuple(image))
            else:
                infeasible = True
        extra = {
            tuple(image)
            for i, j, k in self.extra_triangle_triples
            if len(image := sorted({a[i], a[j], a[k]})) == 3
        }
        return BranchState(
            right_cut_triples=tuple(sorted(triples)),
            separated_pairs=tuple(sorted(pairs)),
            extra_triangle_triples=tuple(sorted(extra)),
            infeasible=infeasible,
        )


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible"
    objective_value: float
    x: np.ndarray | None

    @property
    def is_integral(self) -> bool:
        if self.x is None:
            return False
        return bool(np.abs(self.x - np.round(self.x)).max(initial=0.0) <= INTEGRALITY_TOL)


def solve_lp_relaxation(
    model: SparseModel,
    state: BranchState | None = None,
    backend: LpBackend | None = None,
) -> LpSolution:
    """LP relaxation of the model under the state's cuts.

    The optimal value upper-bounds the maximum modularity over all
    partitions consistent with the branch state.
    """
    state = state or BranchState()
    backend = backend or DEFAULT_BACKEND
    if state.infeasible:
        return LpSolution("infeasible", -np.inf, None)
    nvars = model.pair_count
    if nvars == 0:
        return LpSolution("optimal", model.constant, np.zeros(0))

    rows, cols, vals = model._triangle_rows
    nrows = 3 * len(model.triples)
    extra = tuple(t for t in state.extra_triangle_triples if t not in set(model.triples))
    if extra:
        er, ec, ev = _triangle_row_arrays(model.n, extra, row_offset=nrows)
        rows = np.concatenate([rows, er])
        cols = np.concatenate([cols, ec])
        vals = np.concatenate([vals, ev])
        nrows += 3 * len(extra)
    b_ub = np.zeros(nrows)

    if state.right_cut_triples:
        rc_rows, rc_cols, rc_vals = [], [], []
        for i, j, k in state.right_cut_triples:
            for idx in (
                pair_index(model.n, i, j),
                pair_index(model.n, i, k),
                pair_index(model.n, j, k),
            ):
                rc_rows.append(nrows)
                rc_cols.append(idx)
                rc_vals.append(-1.0)
            nrows += 1
        rows = np.concatenate([rows, rc_rows])
        cols = np.concatenate([cols, rc_cols])
        vals = np.concatenate([vals, rc_vals])
        b_ub = np.concatenate([b_ub, -2.0 * np.ones(len(state.right_cut_triples))])

    a_ub = None
    if nrows:
        a_ub = sp.csr_matrix((vals, (rows, cols)), shape=(nrows, nvars))

    lower = np.zeros(nvars)
    upper = np.ones(nvars)
    for idx in model.presolved_separated:
        lower[idx] = 1.0
    for i, j in state.separated_pairs:
        lower[pair_index(model.n, i, j)] = 1.0

    result = backend.solve_min(model.coefficients, a_ub, b_ub if nrows else None, lower, upper)
    if result.status == "infeasible":
        return LpSolution("infeasible", -np.inf, None)
    x = np.clip(result.x, 0.0, 1.0)
    return LpSolution("optimal", model.objective_value(x), x)


def find_violated_triples(
    sol: "LpSolution | np.ndarray",
    n: int,
    eps: float = VIOLATION_EPS,
) -> list[tuple[tuple[int, int, int], float]]:
    """Triples whose pair sums fall strictly inside (eps, 2 - eps).

    Such a triple violates both branching disjuncts (all-together and
    at-least-two-separated). Only triples touching a fractional variable are
    inspected, so integral solutions yield an empty list. Results are sorted
    by score min(s, 2 - s) descending, then lexicographically.
    """
    x = sol.x if isinstance(sol, LpSolution) else sol
    if x is None:
        return []
    frac = np.flatnonzero((x > eps) & (x < 1.0 - eps))
    if frac.size == 0:
        return []
    xm = pair_vector_to_matrix(x, n)
    pairs = list(itertools.combinations(range(n), 2))
    seen: set[tuple[int, int, int]] = set()
    out = []
    for idx in frac:
        i, j = pairs[idx]
        for k in range(n):
            if k == i or k == j:
                continue
            triple = tuple(sorted((i, j, k)))
            if triple in seen:
                continue
            seen.add(triple)
            a, b, c = triple
            s = xm[a, b] + xm[a, c] + xm[b, c]
            if eps < s < 2.0 - eps:
                out.append((triple, float(min(s, 2.0 - s))))
    out.sort(key=lambda ts: (-ts[1], ts[0]))
    return out


def violated_triangle_triples(
    x: np.ndarray, n: int, tol: float = 1e-7
) -> list[tuple[int, int, int]]:
    """Triples with some triangle inequality x_ab <= x_ac + x_bc violated."""
    xm = pair_vector_to_matrix(x, n)
    out: set[tuple[int, int, int]] = set()
    for i, j in itertools.combinations(range(n), 2):
        if xm[i, j] <= tol:
            continue
        gap = xm[i, j] - (xm[i, :] + xm[j, :])
        for k in np.flatnonzero(gap > tol):
            if k != i and k != j:
                out.add(tuple(sorted((i, j, int(k)))))
    return sorted(out)


def solution_partition(x: np.ndarray, n: int) -> Partition:
    """Round an (integral) LP point and close it into a partition.

    Nodes joined by x_ij < 1/2 links end up together; component closure
    keeps the result well defined even if the rounded point is intransitive.
    """
    matrix = (pair_vector_to_matrix(x, n) >= 0.5).astype(np.uint8)
    np.fill_diagonal(matrix, 0)
    return partition_from_pairs(PairAssignment(n, matrix))


def write_lp_text(model: SparseModel, state: BranchState | None, out: IO[str]) -> None:
    """Dump the model in the common LP text interchange format.

    The objective constant cannot be expressed in the format and is noted in
    a leading comment.
    """
    state = state or BranchState()
    names = [f"x_{i}_{j}" for i, j in itertools.combinations(range(model.n), 2)]
    out.write(f"\\ objective constant (add to reported value): {model.constant!r}\n")
    out.write("Maximize\n obj:")
    wrote = False
    for name, c in zip(names, model.coefficients):
        if c == 0.0:
            continue
        out.write(f" {'-' if c > 0 else '+'} {abs(c)!r} {name}")
        wrote = True
    if not wrote:
        out.write(" 0")
    out.write("\nSubject To\n")
    row = 0
    all_triples = model.triples + tuple(
        t for t in state.extra_triangle_triples if t not in set(model.triples)
    )
    for i, j, k in all_triples:
        nij, nik, njk = f"x_{i}_{j}", f"x_{i}_{k}", f"x_{j}_{k}"
        for a, b, c in ((nij, nik, njk), (nik, nij, njk), (njk, nij, nik)):
            out.write(f" t{row}: {a} - {b} - {c} <= 0\n")
            row += 1
    for r, (i, j, k) in enumerate(state.right_cut_triples):
        out.write(f" rc{r}: x_{i}_{j} + x_{i}_{k} + x_{j}_{k} >= 2\n")
    out.write("Bounds\n")
    fixed = set(model.presolved_separated) | {
        pair_index(model.n, i, j) for i, j in state.separated_pairs
    }
    for idx, name in enumerate(names):
        if idx in fixed:
            out.write(f" {name} = 1\n")
        else:
            out.write(f" 0 <= {name} <= 1\n")
    out.write("End\n")
