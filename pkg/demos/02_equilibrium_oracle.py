"""The assignment oracle on a two-route toy network, with an analytically
known equilibrium, and the effect of a capacity-reduction policy.

Run:  python3 demos/02_equilibrium_oracle.py
"""
from dualflow.network import Edge, Node, RoadNetwork
from dualflow.oracle import (CostFunction, OdDemand, OracleConfig,
                             apply_policy, assign)
from dualflow.scenarios import PolicyScenario
from dualflow.synth import CityConfig, generate_city

# Two parallel routes A -> B. Route 1: t = 1 + v/10, route 2: t = 2 + v/10.
# For 15 travellers, equalizing travel times gives v = (12.5, 2.5).
nodes = [Node("A", 0, 0), Node("M1", 1, 1), Node("M2", 1, -1), Node("B", 2, 0)]
edges = [Edge("r1a", "A", "M1", 1000, 1, 100, "primary"),
         Edge("r1b", "M1", "B", 1000, 1, 100, "primary"),
         Edge("r2a", "A", "M2", 1000, 1, 100, "primary"),
         Edge("r2b", "M2", "B", 1000, 1, 100, "primary")]
net = RoadNetwork(nodes, edges)
cost = CostFunction(kind="affine", a=(1.0, 1e-9, 2.0, 1e-9),
                    b=(0.1, 0.0, 0.1, 0.0))

res = assign(net, [OdDemand("A", "B", 15, 1e9)], cost,
             OracleConfig(max_iter=2000, gap_tol=1e-6))
print(f"equilibrium after {res.iterations} iterations "
      f"(relative gap {res.relative_gap:.2e}):")
print(f"  route 1 volume {res.volume[0]:.3f}  (analytic 12.5)")
print(f"  route 2 volume {res.volume[2]:.3f}  (analytic 2.5)")

# A real city with BPR congestion and a district policy.
city, demand = generate_city(CityConfig(width=6, height=5, seed=0, n_od=16))
cfg = OracleConfig(max_iter=60, gap_tol=1e-3, mode_logit_scale=0.01)
before = assign(city, demand, CostFunction(kind="bpr"), cfg)

district = city.districts[0]
scenario = PolicyScenario(district, frozenset([district]), reduction=0.5)
after = assign(apply_policy(city, scenario), demand, CostFunction(kind="bpr"), cfg)

delta = after.volume - before.volume
inside = [i for i, e in enumerate(city.edges)
          if e.district == district and e.highway_class != "other"]
print(f"\nhalving capacity in district {district!r}:")
print(f"  mean volume change on treated edges: "
      f"{delta[inside].mean():+.1f} veh/h")
print(f"  largest single-edge shifts: {delta.min():+.1f} / {delta.max():+.1f}")
print(f"  mean car share before/after: {before.car_share.mean():.3f} / "
      f"{after.car_share.mean():.3f}")
