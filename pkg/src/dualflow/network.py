"""Road network loading, validation, and line-graph (dual) construction.

The street graph has intersections as nodes and directed road segments as
edges. The GNN operates on the dual: one dual node per road segment, with a
dual edge (e1, e2) whenever e1 ends where e2 starts.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

HIGHWAY_CLASSES = ("primary", "secondary", "tertiary", "other")

# OSM-style "*_link" ramps count as their parent class.
_CLASS_FOLD = {f"{c}_link": c for c in ("primary", "secondary", "tertiary")}


class NetworkError(ValueError):
    """Raised for schema violations and inconsistent network files."""


def normalize_highway_class(raw: str) -> str:
    cls = _CLASS_FOLD.get(raw, raw)
    if cls not in HIGHWAY_CLASSES:
        raise NetworkError(f"unknown highway_class {raw!r}")
    return cls


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    id: str
    from_node: str
    to_node: str
    capacity: float
    free_flow_time: float
    length: float
    highway_class: str
    district: str | None = None

    @property
    def is_loop(self) -> bool:
        return self.from_node == self.to_node


@dataclass
class RoadNetwork:
    nodes: list[Node]
    edges: list[Edge]
    district_adjacency: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.node_index = {n.id: i for i, n in enumerate(self.nodes)}
        self.edge_index = {e.id: i for i, e in enumerate(self.edges)}

    @property
    def districts(self) -> list[str]:
        seen = {e.district for e in self.edges if e.district is not None}
        seen.update(d for pair in self.district_adjacency for d in pair)
        return sorted(seen)

    def district_graph(self) -> dict[str, set[str]]:
        """Symmetric adjacency over district ids (isolated districts included)."""
        adj: dict[str, set[str]] = {d: set() for d in self.districts}
        for a, b in self.district_adjacency:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def edges_in_districts(self, districts) -> list[Edge]:
        wanted = set(districts)
        return [e for e in self.edges if e.district in wanted]

    def node(self, node_id: str) -> Node:
        return self.nodes[self.node_index[node_id]]

    def edge(self, edge_id: str) -> Edge:
        return self.edges[self.edge_index[edge_id]]


@dataclass
class DualGraph:
    """Line graph of a road network.

    dual node i corresponds to ``edge_ids[i]`` (declaration order of the
    non-loop edges); ``positions[i]`` is the segment midpoint.
    """

    edge_ids: list[str]
    positions: np.ndarray           # (n, 2)
    dual_edges: list[tuple[int, int]]
    symmetric: bool

    @property
    def n_nodes(self) -> int:
        return len(self.edge_ids)

    def edge_index_array(self) -> np.ndarray:
        """Dual edges as an (m, 2) uint32 array (empty -> shape (0, 2))."""
        if not self.dual_edges:
            return np.zeros((0, 2), dtype=np.uint32)
        return np.asarray(self.dual_edges, dtype=np.uint32)


def _require(record: dict, keys, what: str, idx: int):
    for k in keys:
        if k not in record:
            raise NetworkError(f"{what} record {idx}: missing field {k!r}")


def load_network(path) -> RoadNetwork:
    """Load and validate a network JSON file."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    for key in ("nodes", "edges"):
        if key not in raw:
            raise NetworkError(f"network file missing top-level {key!r}")

    nodes = []
    for i, rec in enumerate(raw["nodes"]):
        _require(rec, ("id", "x", "y"), "node", i)
        x, y = float(rec["x"]), float(rec["y"])
        if not (np.isfinite(x) and np.isfinite(y)):
            raise NetworkError(f"node record {i}: non-finite coordinate")
        nodes.append(Node(str(rec["id"]), x, y))
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise NetworkError("duplicate node ids")
    known = set(ids)

    edges = []
    for i, rec in enumerate(raw["edges"]):
        _require(rec, ("id", "from", "to", "capacity", "free_flow_time",
                       "length", "highway_class"), "edge", i)
        for endpoint in (rec["from"], rec["to"]):
            if str(endpoint) not in known:
                raise NetworkError(
                    f"edge record {i}: dangling node reference {endpoint!r}")
        cap = float(rec["capacity"])
        if cap <= 0:
            raise NetworkError(f"edge record {i}: non-positive capacity")
        fft = float(rec["free_flow_time"])
        length = float(rec["length"])
        if fft <= 0 or length <= 0:
            raise NetworkError(f"edge record {i}: non-positive time or length")
        edges.append(Edge(
            id=str(rec["id"]),
            from_node=str(rec["from"]),
            to_node=str(rec["to"]),
            capacity=cap,
            free_flow_time=fft,
            length=length,
            highway_class=normalize_highway_class(str(rec["highway_class"])),
            district=None if rec.get("district") is None else str(rec["district"]),
        ))
    eids = [e.id for e in edges]
    if len(set(eids)) != len(eids):
        raise NetworkError("duplicate edge ids")

    adjacency = [(str(a), str(b)) for a, b in raw.get("district_adjacency", [])]
    net = RoadNetwork(nodes, edges, adjacency)
    if not _weakly_connected(net):
        warnings.warn("network is not weakly connected", stacklevel=2)
    return net


def _weakly_connected(net: RoadNetwork) -> bool:
    if not net.nodes:
        return True
    adj: dict[str, set[str]] = {n.id: set() for n in net.nodes}
    for e in net.edges:
        adj[e.from_node].add(e.to_node)
        adj[e.to_node].add(e.from_node)
    stack = [net.nodes[0].id]
    seen = {net.nodes[0].id}
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(net.nodes)


def edge_midpoint(e: Edge, net: RoadNetwork) -> tuple[float, float]:
    a, b = net.node(e.from_node), net.node(e.to_node)
    return ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)


def build_dual(net: RoadNetwork, symmetric: bool = True) -> DualGraph:
    """Construct the line graph; dual-node order follows edge declaration order.

    Loops are skipped with a warning. With ``symmetric=True`` each adjacency
    is added in both directions (bidirectional message passing).
    """
    kept = [e for e in net.edges if not e.is_loop]
    if len(kept) != len(net.edges):
        warnings.warn(f"skipping {len(net.edges) - len(kept)} loop edge(s) "
                      "in dual construction", stacklevel=2)
    positions = np.array([edge_midpoint(e, net) for e in kept], dtype=np.float64)
    if positions.size == 0:
        positions = np.zeros((0, 2), dtype=np.float64)

    by_tail: dict[str, list[int]] = {}
    for j, e in enumerate(kept):
        by_tail.setdefault(e.from_node, []).append(j)

    dual_edges: list[tuple[int, int]] = []
    for i, e in enumerate(kept):
        for j in by_tail.get(e.to_node, ()):
            if i != j:
                dual_edges.append((i, j))
    if symmetric:
        seen = set(dual_edges)
        for a, b in list(dual_edges):
            if (b, a) not in seen:
                seen.add((b, a))
        dual_edges = sorted(seen)
    else:
        dual_edges = sorted(dual_edges)

    return DualGraph([e.id for e in kept], positions, dual_edges, symmetric)


def save_network(net: RoadNetwork, path) -> None:
    payload = {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in net.nodes],
        "edges": [{
            "id": e.id, "from": e.from_node, "to": e.to_node,
            "capacity": e.capacity, "free_flow_time": e.free_flow_time,
            "length": e.length, "highway_class": e.highway_class,
            "district": e.district,
        } for e in net.edges],
        "district_adjacency": [list(p) for p in net.district_adjacency],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
