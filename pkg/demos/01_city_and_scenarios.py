"""Generate a synthetic gridded city, inspect its dual graph, and sample
connected-district policy scenarios.

Run:  python3 demos/01_city_and_scenarios.py
"""
import collections

from dualflow.network import build_dual
from dualflow.scenarios import (count_connected_subsets, sample_scenarios,
                                split_scenarios)
from dualflow.synth import CityConfig, generate_city

net, demand = generate_city(CityConfig(seed=0))
print(f"city: {len(net.nodes)} nodes, {len(net.edges)} directed edges, "
      f"{len(net.districts)} districts, {len(demand)} OD pairs")

classes = collections.Counter(e.highway_class for e in net.edges)
print("edge classes:", dict(classes))

dual = build_dual(net)
print(f"dual graph: {dual.n_nodes} nodes (one per road edge), "
      f"{len(dual.dual_edges)} dual edges")

adjacency = net.district_graph()
total = count_connected_subsets(adjacency)
print(f"connected district subsets available: {total}")

scenarios = sample_scenarios(adjacency, 200, seed=0, include_singletons=True)
split = split_scenarios(scenarios, seed=0)
print(f"sampled {len(scenarios)} scenarios "
      f"(mean subset size {split.stats['mean_subset_size']:.2f}); "
      f"split {len(split.train)}/{len(split.validation)}/{len(split.test)}")
print("example scenario ids:", [s.id for s in scenarios[:3]])
