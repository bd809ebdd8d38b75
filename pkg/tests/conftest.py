import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modmax import Graph, parse_edge_list

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def triangle() -> Graph:
    return Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


@pytest.fixture
def two_triangles() -> Graph:
    return Graph.from_edges(
        6,
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
    )


@pytest.fixture
def barbell() -> Graph:
    """Two triangles joined by one bridge edge; m = 7, Q* = 5/14."""
    return Graph.from_edges(
        6,
        [
            (0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
            (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0),
            (2, 3, 1.0),
        ],
    )


@pytest.fixture(scope="session")
def karate() -> Graph:
    return parse_edge_list((DATA_DIR / "karate.edgelist").read_text())


# The 5-cycle's root LP relaxation is fractional (value 0.1 > Q* = 0.08),
# so it exercises real branching.
FRACTIONAL_EDGES = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 4, 1.0)]


@pytest.fixture
def fractional_root() -> Graph:
    return Graph.from_edges(5, FRACTIONAL_EDGES)
