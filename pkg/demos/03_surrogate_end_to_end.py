"""End-to-end miniature of the surrogate pipeline: simulate policy scenarios
with the equilibrium oracle, train the graph surrogate on the volume changes,
and evaluate it per road subset.

Deliberately tiny so it runs in about a minute; see the CLI (`dualflow
--help`) for the full-size pipeline.

Run:  python3 demos/03_surrogate_end_to_end.py
"""
import numpy as np

from dualflow.dataset import build_dataset
from dualflow.metrics import evaluate_subsets
from dualflow.network import build_dual
from dualflow.nn import GnnConfig, GnnModel, count_parameters, init
from dualflow.oracle import CostFunction, OracleConfig, base_volume, run_scenarios
from dualflow.scenarios import sample_scenarios, split_scenarios
from dualflow.synth import CityConfig, generate_city
from dualflow.training import TrainConfig, train, validate
from dualflow import dataset as dsm

net, demand = generate_city(CityConfig(width=6, height=5, seed=0, n_od=24))
dual = build_dual(net)
cost = CostFunction(kind="bpr")
ocfg = OracleConfig(max_iter=40, gap_tol=1e-3, mode_logit_scale=0.01,
                    noise_sigma=0.05)

scenarios = sample_scenarios(net.district_graph(), 40, seed=0,
                             include_singletons=True)
split = split_scenarios(scenarios, seed=0)
print(f"{len(scenarios)} scenarios, split "
      f"{len(split.train)}/{len(split.validation)}/{len(split.test)}")

print("running the oracle (base + scenarios)...")
base = base_volume(net, demand, cost, ocfg, n_seeds=4)
vols = run_scenarios(net, demand, cost, ocfg, scenarios, workers=4)
base_map = {e.id: base[i] for i, e in enumerate(net.edges)}
vol_maps = {sid: {e.id: v[i] for i, e in enumerate(net.edges)}
            for sid, v in vols.items()}

ds = build_dataset(net, dual, scenarios, split, base_map, vol_maps)
model = init(GnnModel(GnnConfig(conv_local=16, conv_global=(16, 32),
                                gat_sizes=(32, 16))), seed=0)
print(f"model parameters: {count_parameters(model)}")

tcfg = TrainConfig(max_epochs=30, patience=30, batch_size=8,
                   accumulation_every=3, peak_lr=1e-3, warmup_steps=30, seed=0)
model, log = train(model, ds, tcfg)
print(f"trained {len(log.records)} epochs, best at {log.best_epoch}")

test = ds.standardized(ds.split.test)
mse_t, r2_t = validate(model, test)
print(f"test MSE {mse_t:.4f}, R^2 {r2_t:.3f} (standardized units)")

y_true, y_pred = {}, {}
for sid in ds.split.test:
    std = dsm.transform(ds.samples[sid], ds.scaler)
    pred = model.predict(std.features, std.positions, std.edge_index)
    y_pred[sid] = dsm.inverse_transform_target(pred, ds.scaler)
    y_true[sid] = ds.samples[sid].targets
by_id = {s.id: s for s in scenarios}
report = evaluate_subsets(net, [by_id[i] for i in ds.split.test],
                          y_true, y_pred)
print()
print(report.to_text())
