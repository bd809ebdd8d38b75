"""Partitions, pairwise co-assignment matrices, and AMI similarity."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

AMI_NORMALIZERS = ("arithmetic", "max", "min", "geometric")


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Community labels, one per node, in canonical form.

    Canonical form numbers communities by order of first appearance, so two
    label vectors describing the same partition compare equal. Construct via
    :meth:`from_labels` unless the input is already canonical.
    """

    labels: tuple[int, ...]

    def __post_init__(self):
        seen = 0
        for v in self.labels:
            if v < 0 or v > seen:
                raise PartitionError(
                    "labels are not in canonical first-appearance order; "
                    "use Partition.from_labels"
                )
            if v == seen:
                seen += 1

    @classmethod
    def from_labels(cls, labels: Iterable) -> "Partition":
        remap: dict = {}
        out = []
        for v in labels:
            if v not in remap:
                remap[v] = len(remap)
            out.append(remap[v])
        return cls(tuple(out))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    @cached_property
    def label_array(self) -> np.ndarray:
        arr = np.asarray(self.labels, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    def communities(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for node, c in enumerate(self.labels):
            out[c].append(node)
        return out


@dataclass(frozen=True)
class PairAssignment:
    """Binary pairwise separation matrix: x[i, j] = 0 iff i, j co-assigned.

    Stored as a full symmetric matrix with zero diagonal; only the upper
    triangle carries information.
    """

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.n, self.n):
            raise PartitionError(f"matrix shape {m.shape} does not match n={self.n}")
        if not np.isin(m, (0, 1)).all():
            raise PartitionError("pair assignment entries must be 0 or 1")
        if (m != m.T).any() or m.diagonal().any():
            raise PartitionError("pair assignment must be symmetric with zero diagonal")
        m.flags.writeable = False

    def x(self, i: int, j: int) -> int:
        return int(self.matrix[i, j])


def pairs_from_partition(p: Partition) -> PairAssignment:
    lab = p.label_array
    x = (lab[:, None] != lab[None, :]).astype(np.uint8)
    return PairAssignment(p.n, x)


def partition_from_pairs(pa: PairAssignment) -> Partition:
    """Communities = connected components of the x_ij = 0 relation.

    Component closure makes the result well defined even when the binary
    matrix is not transitive.
    """
    parent = list(range(pa.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    together = np.argwhere(np.triu(pa.matrix == 0, k=1))
    for i, j in together:
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return Partition.from_labels(find(v) for v in range(pa.n))


def _contingency(labels_a: Sequence, labels_b: Sequence) -> np.ndarray:
    index_a: dict = {}
    index_b: dict = {}
    for v in labels_a:
        index_a.setdefault(v, len(index_a))
    for v in labels_b:
        index_b.setdefault(v, len(index_b))
    table = np.zeros((len(index_a), len(index_b)), dtype=np.int64)
    for va, vb in zip(labels_a, labels_b):
        table[index_a[va], index_b[vb]] += 1
    return table


def _entropy(counts: np.ndarray, total: int) -> float:
    terms = [
        (c / total) * (math.log(total) - math.log(c)) for c in counts.tolist() if c > 0
    ]
    return math.fsum(terms)


def _mutual_information(table: np.ndarray, total: int) -> float:
    # Terms are evaluated on the sorted marginal pair and accumulated with
    # fsum, so the result is bit-identical under argument swap.
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    terms = []
    for i, j in np.argwhere(table > 0):
        nij = int(table[i, j])
        lo, hi = sorted((int(a[i]), int(b[j])))
        terms.append(
            (nij / total)
            * (math.log(total) + math.log(nij) - math.log(lo) - math.log(hi))
        )
    return math.fsum(terms)


def _expected_mutual_information(table: np.ndarray, total: int) -> float:
    # Exact expectation under the hypergeometric (permutation) model, with
    # the factorial products evaluated in log space. As above, each term is
    # computed from the sorted marginal pair to keep the function symmetric
    # to the last bit.
    a = [int(v) for v in table.sum(axis=1)]
    b = [int(v) for v in table.sum(axis=0)]
    gl = gammaln(np.arange(total + 2))
    log_n = math.log(total)
    terms = []
    for ai in a:
        for bj in b:
            lo, hi = sorted((ai, bj))
            for nij in range(max(1, lo + hi - total), lo + 1):
                log_p = (
                    gl[lo + 1]
                    + gl[hi + 1]
                    + gl[total - lo + 1]
                    + gl[total - hi + 1]
                    - gl[total + 1]
                    - gl[nij + 1]
                    - gl[lo - nij + 1]
                    - gl[hi - nij + 1]
                    - gl[total - lo - hi + nij + 1]
                )
                terms.append(
                    (nij / total)
                    * (log_n + math.log(nij) - math.log(lo) - math.log(hi))
                    * math.exp(log_p)
                )
    return math.fsum(terms)


def _is_relabeling(table: np.ndarray) -> bool:
    return bool(
        ((table > 0).sum(axis=0) == 1).all() and ((table > 0).sum(axis=1) == 1).all()
    )


def ami(
    labels_a: "Partition | Sequence",
    labels_b: "Partition | Sequence",
    average_method: str = "arithmetic",
) -> float:
    """Adjusted mutual information with a symmetric normalizer.

    Identical partitions (up to relabeling) score exactly 1. Independent
    partitions score near 0, possibly slightly negative. The normalizer is
    the arithmetic mean of the two label entropies by default; ``max``,
    ``min`` and ``geometric`` are also accepted.
    """
    if isinstance(labels_a, Partition):
        labels_a = labels_a.labels
    if isinstance(labels_b, Partition):
        labels_b = labels_b.labels
    labels_a = list(labels_a)
    labels_b = list(labels_b)
    if len(labels_a) != len(labels_b):
        raise PartitionError(
            f"label vectors differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    if not labels_a:
        raise PartitionError("cannot compare empty labelings")
    if average_method not in AMI_NORMALIZERS:
        raise PartitionError(f"unknown average_method {average_method!r}")

    total = len(labels_a)
    table = _contingency(labels_a, labels_b)
    if _is_relabeling(table):
        return 1.0

    mi = _mutual_information(table, total)
    emi = _expected_mutual_information(table, total)
    h_a = _entropy(table.sum(axis=1), total)
    h_b = _entropy(table.sum(axis=0), total)
    if average_method == "arithmetic":
        norm = 0.5 * (h_a + h_b)
    elif average_method == "max":
        norm = max(h_a, h_b)
    elif average_method == "min":
        norm = min(h_a, h_b)
    else:
        norm = math.sqrt(h_a * h_b)

    denominator = norm - emi
    # Guard against blowup when the normalizer and EMI nearly coincide.
    eps = float(np.finfo(np.float64).eps)
    if denominator < 0:
        denominator = min(denominator, -eps)
    else:
        denominator = max(denominator, eps)
    return (mi - emi) / denominator


_INT_TOKEN = re.compile(r"[+-]?\d+")


def parse_partition_file(text: str) -> dict:
    """Parse ``node_id community_id`` lines; ``#`` lines are comments.

    Integer-looking tokens become ints so files agree with in-memory node
    labels regardless of formatting.
    """

    def coerce(tok: str):
        return int(tok) if _INT_TOKEN.fullmatch(tok) else tok

    assignment: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise PartitionError(
                f"line {lineno}: expected 'node_id community_id', got {len(tokens)} tokens"
            )
        node = coerce(tokens[0])
        if node in assignment:
            raise PartitionError(f"line {lineno}: node {node!r} assigned twice")
        assignment[node] = coerce(tokens[1])
    return assignment


def aligned_label_pairs(map_a: dict, map_b: dict) -> tuple[list, list]:
    """Align two node -> community maps on their (identical) node sets."""
    if set(map_a) != set(map_b):
        only_a = sorted(map(str, set(map_a) - set(map_b)))[:5]
        only_b = sorted(map(str, set(map_b) - set(map_a)))[:5]
        raise PartitionError(
            f"node sets differ (first only-in-a: {only_a}, first only-in-b: {only_b})"
        )
    keys = sorted(map_a, key=lambda v: (isinstance(v, str), v))
    return [map_a[k] for k in keys], [map_b[k] for k in keys]
