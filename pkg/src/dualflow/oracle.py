"""Equilibrium traffic assignment oracle.

Desk-scale stand-in for an agent-based simulation: static user equilibrium
via the method of successive averages (MSA), with a binary logit car-vs-
alternative mode split recomputed from current shortest-path costs and
optional seeded lognormal demand noise.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .network import RoadNetwork
from .scenarios import PolicyScenario

POLICY_CLASSES = ("primary", "secondary", "tertiary")


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OdDemand:
    origin: str
    destination: str
    demand: float           # vehicles/hour
    alt_cost: float         # generalized cost of the non-car alternative, s

    def __post_init__(self):
        if self.demand < 0:
            raise ValueError("demand must be >= 0")
        if self.origin == self.destination:
            raise ValueError("origin must differ from destination")


@dataclass(frozen=True)
class CostFunction:
    """Edge travel-time function of volume.

    affine: t = a + b * v   (a, b scalar or per-edge sequences)
    bpr:    t = t0 * (1 + alpha * (v / capacity) ** beta)
    """

    kind: str = "bpr"
    a: float | tuple = None
    b: float | tuple = None
    alpha: float = 0.15
    beta: float = 4.0

    def times(self, net: RoadNetwork, volumes: np.ndarray) -> np.ndarray:
        if self.kind == "affine":
            a = np.asarray(self.a, dtype=np.float64)
            b = np.asarray(self.b, dtype=np.float64)
            return a + b * volumes
        if self.kind == "bpr":
            t0 = np.array([e.free_flow_time for e in net.edges])
            cap = np.array([e.capacity for e in net.edges])
            return t0 * (1.0 + self.alpha * (volumes / cap) ** self.beta)
        raise ValueError(f"unknown cost kind {self.kind!r}")


@dataclass
class OracleConfig:
    max_iter: int = 100
    gap_tol: float = 1e-3
    mode_logit_scale: float | None = None  # None disables mode shift
    seed: int = 0
    noise_sigma: float = 0.0
    freeze_mode_split: bool = False


@dataclass
class AssignmentResult:
    volume: np.ndarray              # per edge, order = net.edges
    relative_gap: float
    iterations: int
    car_share: np.ndarray           # per OD pair
    converged: bool
    gap_history: list[float] = field(default_factory=list)

    def volume_by_edge_id(self, net: RoadNetwork) -> dict[str, float]:
        return {e.id: float(self.volume[i]) for i, e in enumerate(net.edges)}


def logit_car_share(car_cost: float, alt_cost: float, scale: float) -> float:
    """Binary logit share of the car mode; 0.5 at equal costs."""
    if scale < 0:
        raise ValueError("scale must be >= 0")
    z = scale * (car_cost - alt_cost)
    # guard exp overflow; share saturates anyway
    if z > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(z))


def _edge_cost_graph(net: RoadNetwork, times: np.ndarray):
    """Node-to-node cost matrix keeping, per (u, v), the cheapest parallel edge."""
    n = len(net.nodes)
    best: dict[tuple[int, int], int] = {}
    for i, e in enumerate(net.edges):
        if e.is_loop:
            continue
        key = (net.node_index[e.from_node], net.node_index[e.to_node])
        if key not in best or times[i] < times[best[key]]:
            best[key] = i
    rows = np.fromiter((k[0] for k in best), dtype=np.int64, count=len(best))
    cols = np.fromiter((k[1] for k in best), dtype=np.int64, count=len(best))
    data = np.fromiter((times[i] for i in best.values()), dtype=np.float64,
                       count=len(best))
    graph = csr_matrix((data, (rows, cols)), shape=(n, n))
    edge_of = {(int(r), int(c)): i for (r, c), i in best.items()}
    return graph, edge_of


def _noisy_demand(demand: list[OdDemand], seed: int, sigma: float) -> np.ndarray:
    base = np.array([d.demand for d in demand], dtype=np.float64)
    if sigma <= 0:
        return base
    rng = np.random.default_rng(seed)
    return base * np.exp(sigma * rng.standard_normal(len(demand)))


def assign(net: RoadNetwork, demand: list[OdDemand], cost: CostFunction,
           config: OracleConfig) -> AssignmentResult:
    """MSA user-equilibrium assignment with per-iteration logit mode split."""
    n_edges = len(net.edges)
    od_demand = _noisy_demand(demand, config.seed, config.noise_sigma)
    origins = sorted({d.origin for d in demand})
    origin_idx = {o: i for i, o in enumerate(origins)}
    src_nodes = np.array([net.node_index[o] for o in origins])

    volumes = np.zeros(n_edges)
    car_share = np.ones(len(demand))
    gap_history: list[float] = []
    rel_gap = math.inf
    it = 0

    for it in range(1, config.max_iter + 1):
        times = cost.times(net, volumes)
        graph, edge_of = _edge_cost_graph(net, times)
        dist, predecessors = dijkstra(graph, indices=src_nodes,
                                      return_predecessors=True)

        if not (config.freeze_mode_split and it > 1):
            if config.mode_logit_scale is None:
                car_share = np.ones(len(demand))
            else:
                car_share = np.empty(len(demand))
                for k, d in enumerate(demand):
                    sp = dist[origin_idx[d.origin], net.node_index[d.destination]]
                    if not np.isfinite(sp):
                        raise OracleError(
                            f"unreachable OD pair {d.origin} -> {d.destination}")
                    car_share[k] = logit_car_share(sp, d.alt_cost,
                                                   config.mode_logit_scale)
        car_demand = od_demand * car_share

        # all-or-nothing load of car demand on current shortest paths
        aon = np.zeros(n_edges)
        for k, d in enumerate(demand):
            if car_demand[k] <= 0:
                continue
            row = origin_idx[d.origin]
            t = net.node_index[d.destination]
            if not np.isfinite(dist[row, t]):
                raise OracleError(
                    f"unreachable OD pair {d.origin} -> {d.destination}")
            while t != src_nodes[row]:
                p = predecessors[row, t]
                aon[edge_of[(int(p), int(t))]] += car_demand[k]
                t = p

        # relative gap at current costs: (cost of current flow - cost of AON) /
        # cost of AON; zero at user equilibrium
        aon_cost = float(times @ aon)
        if aon_cost > 0 and it > 1:
            rel_gap = max(0.0, float(times @ volumes) - aon_cost) / aon_cost
            gap_history.append(rel_gap)
            if rel_gap < config.gap_tol:
                break
        volumes = volumes + (aon - volumes) / it

    return AssignmentResult(
        volume=volumes,
        relative_gap=rel_gap if math.isfinite(rel_gap) else 0.0,
        iterations=it,
        car_share=car_share,
        converged=rel_gap < config.gap_tol,
        gap_history=gap_history,
    )


def apply_policy(net: RoadNetwork, scenario: PolicyScenario) -> RoadNetwork:
    """Copy of the network with capacity scaled by (1 - reduction) on
    primary/secondary/tertiary edges inside the scenario districts."""
    from dataclasses import replace

    known = set(net.districts)
    missing = scenario.districts - known
    if missing:
        raise OracleError(f"unknown district id(s): {sorted(missing)}")
    factor = 1.0 - scenario.reduction
    new_edges = []
    for e in net.edges:
        if e.district in scenario.districts and e.highway_class in POLICY_CLASSES:
            new_edges.append(replace(e, capacity=e.capacity * factor))
        else:
            new_edges.append(e)
    return RoadNetwork(list(net.nodes), new_edges, list(net.district_adjacency))


def base_volume(net: RoadNetwork, demand: list[OdDemand], cost: CostFunction,
                config: OracleConfig, n_seeds: int = 1) -> np.ndarray:
    """Mean per-edge volume over assignment runs with seeds 0..n_seeds-1."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    total = np.zeros(len(net.edges))
    for s in range(n_seeds):
        cfg = OracleConfig(**{**config.__dict__, "seed": s})
        total += assign(net, demand, cost, cfg).volume
    return total / n_seeds


def _run_one(args):
    net, demand, cost, config, scenario = args
    modified = apply_policy(net, scenario)
    result = assign(modified, demand, cost, config)
    return scenario.id, result.volume


def run_scenarios(net: RoadNetwork, demand: list[OdDemand], cost: CostFunction,
                  config: OracleConfig, scenarios: list[PolicyScenario],
                  workers: int = 1) -> dict[str, np.ndarray]:
    """Assign every policy scenario; merged deterministically by scenario id."""
    jobs = [(net, demand, cost, config, s) for s in scenarios]
    if workers <= 1:
        results = map(_run_one, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    return dict(sorted(results))


def save_volumes_csv(volumes: dict[str, float] | np.ndarray, net: RoadNetwork,
                     path) -> None:
    if isinstance(volumes, np.ndarray):
        volumes = {e.id: float(volumes[i]) for i, e in enumerate(net.edges)}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_id", "volume"])
        for e in net.edges:
            writer.writerow([e.id, repr(volumes[e.id])])


def load_volumes_csv(path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert header[:2] == ["edge_id", "volume"]
        return {row[0]: float(row[1]) for row in reader}


def load_demand(path) -> list[OdDemand]:
    import json
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return [OdDemand(str(r["origin"]), str(r["destination"]),
                     float(r["demand"]), float(r["alt_cost"])) for r in raw]


def save_demand(demand: list[OdDemand], path) -> None:
    import json
    payload = [{"origin": d.origin, "destination": d.destination,
                "demand": d.demand, "alt_cost": d.alt_cost} for d in demand]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
