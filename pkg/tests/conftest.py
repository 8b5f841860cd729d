import logging

import pytest

from rps_districts.geo import AdjacencyGraph, GeneralizedCounty
from rps_districts.ingest import Dataset, load_nc

# Best plan, one list per district, county ids in pick order.
BEST_PLAN_COLUMNS = [
    [34, 29, 84, 106, 30],
    [69, 10, 24, 75, 9, 31, 71, 53],
    [103, 52, 44, 55, 54, 40, 25, 16],
    [68, 105, 78, 7, 73, 33, 49, 101, 28, 59, 43, 8, 93, 21, 27, 76, 74, 15],
    [94, 63, 36, 23, 4],
    [61, 64, 56, 18, 12],
    [62, 13, 50, 2, 104, 14],
    [41, 80, 83, 17, 89, 90, 3, 5, 102, 6, 65],
    [42, 1, 72, 77, 39, 95, 100, 70, 47, 37],
    [99, 32, 96],
    [97, 98, 19, 67, 35],
    [26, 82, 86, 87, 48, 81, 66, 88],
    [11, 46, 85, 58, 45, 91, 79, 92, 107, 51, 60, 38, 20, 57, 22],
]


@pytest.fixture(scope="session")
def nc():
    logging.getLogger("rps_districts").setLevel(logging.ERROR)
    return load_nc()


def make_dataset(pops, edges, seeds, votes=None, geometry=None, borders=None, name="toy"):
    """Small in-memory dataset; counties are numbered 1..len(pops)."""
    n = len(pops)
    total = sum(pops)
    votes = votes or [(1, 1)] * n
    geometry = geometry or [(1.0, 4.0)] * n
    counties = tuple(
        GeneralizedCounty(i + 1, f"c{i + 1}", pops[i], pops[i] / total,
                          votes[i][0], votes[i][1], geometry[i][0], geometry[i][1])
        for i in range(n)
    )
    if borders is None:
        borders = {e: 1.0 for e in edges}
    graph = AdjacencyGraph.from_edges(n, edges, borders)
    return Dataset(counties, graph, tuple(seeds), total, name)


def grid_edges(rows, cols):
    """4-neighbour edges of a rows x cols grid, cells numbered row-major from 1."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c + 1
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return edges
