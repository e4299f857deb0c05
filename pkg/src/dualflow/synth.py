"""Deterministic synthetic city generator.

Produces a grid street network partitioned into rectangular districts, plus a
seeded OD demand table. Used by the `gen-network` command and the desk-scale
experiment fixtures.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Edge, Node, RoadNetwork
from .oracle import OdDemand

_CLASS_CAPACITY = {"primary": 1800.0, "secondary": 1200.0,
                   "tertiary": 800.0, "other": 600.0}
_CLASS_SPEED_KMH = {"primary": 50.0, "secondary": 40.0,
                    "tertiary": 30.0, "other": 25.0}


@dataclass
class CityConfig:
    width: int = 12            # intersections per row
    height: int = 10           # intersections per column
    districts_x: int = 4
    districts_y: int = 5
    spacing: float = 250.0     # meters between neighboring intersections
    n_od: int = 64
    demand_scale: float = 400.0
    seed: int = 0


def _district_of(col: int, row: int, cfg: CityConfig) -> str:
    dx = min(col * cfg.districts_x // cfg.width, cfg.districts_x - 1)
    dy = min(row * cfg.districts_y // cfg.height, cfg.districts_y - 1)
    return f"d{dy * cfg.districts_x + dx:02d}"


def _edge_class(col_a: int, row_a: int, col_b: int, row_b: int) -> str:
    if col_a == col_b:                      # vertical street
        if col_a % 3 == 0:
            return "primary"
        return "tertiary" if col_a % 2 == 0 else "other"
    if row_a % 3 == 0:                      # horizontal street
        return "secondary"
    return "tertiary" if row_a % 2 == 1 else "other"


def generate_city(cfg: CityConfig | None = None) -> tuple[RoadNetwork, list[OdDemand]]:
    cfg = cfg or CityConfig()
    nodes = []
    node_id = {}
    for row in range(cfg.height):
        for col in range(cfg.width):
            nid = f"n{row:02d}_{col:02d}"
            node_id[(col, row)] = nid
            nodes.append(Node(nid, col * cfg.spacing, row * cfg.spacing))

    edges = []
    def add_pair(a, b):
        col_a, row_a = a
        col_b, row_b = b
        cls = _edge_class(col_a, row_a, col_b, row_b)
        length = cfg.spacing
        fft = length / (_CLASS_SPEED_KMH[cls] / 3.6)
        for tail, head in ((a, b), (b, a)):
            eid = f"e_{node_id[tail]}_{node_id[head]}"
            edges.append(Edge(eid, node_id[tail], node_id[head],
                              _CLASS_CAPACITY[cls], fft, length, cls,
                              _district_of(*tail, cfg)))

    for row in range(cfg.height):
        for col in range(cfg.width):
            if col + 1 < cfg.width:
                add_pair((col, row), (col + 1, row))
            if row + 1 < cfg.height:
                add_pair((col, row), (col, row + 1))

    adjacency = []
    for dy in range(cfg.districts_y):
        for dx in range(cfg.districts_x):
            here = f"d{dy * cfg.districts_x + dx:02d}"
            if dx + 1 < cfg.districts_x:
                adjacency.append((here, f"d{dy * cfg.districts_x + dx + 1:02d}"))
            if dy + 1 < cfg.districts_y:
                adjacency.append((here, f"d{(dy + 1) * cfg.districts_x + dx:02d}"))

    net = RoadNetwork(nodes, edges, adjacency)
    demand = _generate_demand(cfg, net)
    return net, demand


def _generate_demand(cfg: CityConfig, net: RoadNetwork) -> list[OdDemand]:
    rng = np.random.default_rng(cfg.seed)
    n_nodes = len(net.nodes)
    pairs = set()
    demand = []
    alt_speed_ms = 18.0 / 3.6   # generalized non-car alternative
    while len(demand) < cfg.n_od:
        i, j = rng.integers(0, n_nodes, size=2)
        if i == j or (i, j) in pairs:
            continue
        a, b = net.nodes[int(i)], net.nodes[int(j)]
        dist = abs(a.x - b.x) + abs(a.y - b.y)
        if dist < 3 * cfg.spacing:
            continue
        pairs.add((int(i), int(j)))
        size = cfg.demand_scale * float(rng.uniform(0.5, 1.5))
        alt_cost = dist / alt_speed_ms
        demand.append(OdDemand(a.id, b.id, size, alt_cost))
    return demand
