"""Local-search maximizer over symmetric gain matrices.

Supplies feasible partitions (lower bounds) for the search engine and a
standalone heuristic mode. The move set is single-node relocation (steepest
ascent per sweep) plus community-pair merges, iterated until a full sweep
brings no improvement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, ModularityMatrix, modularity_matrix
from .partitions import Partition

_MOVE_TOL = 1e-12


class HeuristicError(ValueError):
    pass


@dataclass(frozen=True)
class HeuristicConfig:
    max_sweeps: int = 100
    random_seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise HeuristicError("max_sweeps must be at least 1")
        if self.restarts < 1:
            raise HeuristicError("restarts must be at least 1")


@dataclass(frozen=True)
class GainMatrix:
    """Symmetric gain entries plus the divisor applied to within-community sums.

    For modularity the entries are b_ij and the scale is 2m, so the reported
    objective equals Q.
    """

    values: np.ndarray
    scale: float

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise HeuristicError("gain matrix must be square")
        if (v != v.T).any():
            raise HeuristicError("gain matrix must be symmetric")
        if not self.scale > 0:
            raise HeuristicError("scale must be positive")
        v.flags.writeable = False

    @classmethod
    def from_modularity(cls, mm: ModularityMatrix) -> "GainMatrix":
        return cls(mm.values, mm.two_m)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def objective(self, labels) -> float:
        """Within-community sum over ordered pairs (diagonal included) / scale."""
        lab = np.asarray(labels)
        total = 0.0
        for c in np.unique(lab):
            idx = np.flatnonzero(lab == c)
            total += float(self.values[np.ix_(idx, idx)].sum())
        return total / self.scale


def perturb_pairs(gm: GainMatrix, pairs, delta: float) -> GainMatrix:
    """Deduct ``delta`` from both oriented entries of each given pair."""
    if not delta > 0:
        raise HeuristicError(f"delta must be positive, got {delta}")
    values = gm.values.copy()
    for i, j in pairs:
        if i == j or not (0 <= i < gm.n and 0 <= j < gm.n):
            raise HeuristicError(f"invalid pair ({i}, {j})")
        values[i, j] -= delta
        values[j, i] -= delta
    return GainMatrix(values, gm.scale)


def perturb_for_right_cut(gm: GainMatrix, triple, delta: float) -> GainMatrix:
    """Deduct ``delta`` from the six entries tied to a separation triple.

    Discourages the local search from co-assigning the triple; the search
    result is still evaluated on the unperturbed matrix by callers.
    """
    i, j, k = triple
    if len({i, j, k}) != 3:
        raise HeuristicError(f"triple {triple} must have three distinct ids")
    return perturb_pairs(gm, [(i, j), (i, k), (j, k)], delta)


def _initial_labels(n: int, restart: int, rng: np.random.Generator) -> np.ndarray:
    if restart == 0:
        return np.arange(n, dtype=np.int64)
    if restart == 1:
        return np.zeros(n, dtype=np.int64)
    k = int(rng.integers(2, n + 1))
    return rng.integers(0, k, size=n).astype(np.int64)


def _relocation_pass(g: np.ndarray, labels: np.ndarray, sums: np.ndarray, sizes: np.ndarray) -> bool:
    """Steepest-ascent single-node moves, nodes visited in index order.

    ``sums[v, c]`` holds the gain between node v and community slot c; both
    it and ``sizes`` are maintained incrementally. Empty slots carry a gain
    of zero, so relocating into one doubles as opening a new community.
    """
    n = g.shape[0]
    moved = False
    for v in range(n):
        c0 = int(labels[v])
        stay = sums[v, c0] - g[v, v]
        vals = sums[v].copy()
        vals[c0] = stay
        target = int(np.argmax(vals))
        if target == c0 or vals[target] <= stay + _MOVE_TOL:
            continue
        labels[v] = target
        sums[:, c0] -= g[:, v]
        sums[:, target] += g[:, v]
        sizes[c0] -= 1
        sizes[target] += 1
        moved = True
    return moved


def _merge_pass(labels: np.ndarray, sums: np.ndarray, sizes: np.ndarray) -> bool:
    """Merge community pairs while some pair has positive combined gain."""
    active = np.flatnonzero(sizes > 0)
    k = len(active)
    if k <= 1:
        return False
    # aggregate gains between communities, positions follow `active`
    pos = {int(c): p for p, c in enumerate(active)}
    agg = np.zeros((k, k))
    lab_pos = np.array([pos[int(c)] for c in labels])
    np.add.at(agg, lab_pos, sums[:, active])
    merged = False
    dead = np.zeros(k, dtype=bool)
    while True:
        view = agg.copy()
        np.fill_diagonal(view, -np.inf)
        view[dead, :] = -np.inf
        view[:, dead] = -np.inf
        a, b = divmod(int(np.argmax(view)), k)
        if not view[a, b] > _MOVE_TOL:
            break
        ca, cb = int(active[a]), int(active[b])
        labels[labels == cb] = ca
        sums[:, ca] += sums[:, cb]
        sums[:, cb] = 0.0
        sizes[ca] += sizes[cb]
        sizes[cb] = 0
        agg[a, :] += agg[b, :]
        agg[:, a] += agg[:, b]
        dead[b] = True
        merged = True
    return merged


def maximize_gain(gm: GainMatrix, cfg: HeuristicConfig) -> tuple[Partition, float]:
    """Locally maximize the within-community gain sum.

    Deterministic given ``cfg.random_seed``; restarts begin from singletons,
    all-in-one, and random partitions. Returns the best partition found and
    its objective, recomputed from scratch. Ties keep the first partition
    found.
    """
    n = gm.n
    if n == 0:
        raise HeuristicError("gain matrix is empty")
    if n == 1:
        p = Partition((0,))
        return p, gm.objective(p.labels)

    g = gm.values
    rng = np.random.default_rng(cfg.random_seed)
    best_obj = -np.inf
    best: Partition | None = None
    for restart in range(cfg.restarts):
        labels = _initial_labels(n, restart, rng)
        sums = np.zeros((n, n))
        for v in range(n):
            sums[:, labels[v]] += g[:, v]
        sizes = np.bincount(labels, minlength=n)
        if __debug__:
            prev = gm.objective(labels)
        for _ in range(cfg.max_sweeps):
            improved = _relocation_pass(g, labels, sums, sizes)
            improved = _merge_pass(labels, sums, sizes) or improved
            if __debug__:
                cur = gm.objective(labels)
                assert cur >= prev - 1e-9, "local search decreased the objective"
                prev = cur
            if not improved:
                break
        obj = gm.objective(labels)
        if obj > best_obj:
            best_obj = obj
            best = Partition.from_labels(labels.tolist())
    assert best is not None
    return best, best_obj


def heuristic_modularity(
    g: Graph,
    gamma: float,
    cfg: HeuristicConfig | None = None,
    two_m: float | None = None,
) -> tuple[Partition, float]:
    """Heuristic modularity maximization; returns (partition, Q)."""
    cfg = cfg or HeuristicConfig()
    mm = modularity_matrix(g, gamma, two_m)
    return maximize_gain(GainMatrix.from_modularity(mm), cfg)
