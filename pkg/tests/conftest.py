import json
from pathlib import Path

import numpy as np
import pytest

from dualflow.network import Edge, Node, RoadNetwork

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def grid4_path():
    return FIXTURES / "grid4.json"


@pytest.fixture
def two_route_net():
    """A -> M1 -> B and A -> M2 -> B; per-route costs set by the caller."""
    nodes = [Node("A", 0, 0), Node("M1", 1, 1), Node("M2", 1, -1), Node("B", 2, 0)]
    edges = [Edge("r1a", "A", "M1", 1000, 1, 100, "primary"),
             Edge("r1b", "M1", "B", 1000, 1, 100, "primary"),
             Edge("r2a", "A", "M2", 1000, 1, 100, "primary"),
             Edge("r2b", "M2", "B", 1000, 1, 100, "primary")]
    return RoadNetwork(nodes, edges)


def write_network(tmp_path, nodes, edges, adjacency=None, name="net.json"):
    path = tmp_path / name
    path.write_text(json.dumps({
        "nodes": nodes, "edges": edges,
        "district_adjacency": adjacency or []}), encoding="utf-8")
    return path


def random_network(rng, n_nodes=6, n_edges=12) -> RoadNetwork:
    """Random small directed multigraph without loops."""
    nodes = [Node(f"n{i}", float(rng.uniform(0, 100)), float(rng.uniform(0, 100)))
             for i in range(n_nodes)]
    classes = ("primary", "secondary", "tertiary", "other")
    edges = []
    for k in range(n_edges):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        edges.append(Edge(f"e{k}", f"n{a}", f"n{b}",
                          float(rng.uniform(100, 2000)),
                          float(rng.uniform(1, 60)),
                          float(rng.uniform(50, 500)),
                          classes[int(rng.integers(0, 4))]))
    return RoadNetwork(nodes, edges)
