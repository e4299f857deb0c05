"""Command-line pipeline: generate a network, sample scenarios, run the
assignment oracle, build the dataset, train, evaluate, and serve."""
from __future__ import annotations

import json
import os
from pathlib import Path

import click
import numpy as np

from . import dataset as ds_mod
from . import metrics as metrics_mod
from . import oracle as oracle_mod
from . import scenarios as scen_mod
from . import synth
from .network import build_dual, load_network, save_network
from .nn.model import GnnConfig, GnnModel, init, load_checkpoint, save_checkpoint
from .training import TrainConfig, train as run_training


def _oracle_setup(config_path):
    cfg_raw = json.loads(Path(config_path).read_text(encoding="utf-8")) \
        if config_path else {}
    cost_raw = cfg_raw.pop("cost", {})
    cost = oracle_mod.CostFunction(
        kind=cost_raw.get("kind", "bpr"),
        a=cost_raw.get("a"), b=cost_raw.get("b"),
        alpha=cost_raw.get("alpha", 0.15), beta=cost_raw.get("beta", 4.0))
    config = oracle_mod.OracleConfig(**cfg_raw)
    return cost, config


@click.group()
def main():
    """Surrogate modeling of traffic policy impacts on a road network."""


@main.command("gen-network")
@click.option("--out", required=True, type=click.Path())
@click.option("--demand-out", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--width", default=12, type=int)
@click.option("--height", default=10, type=int)
@click.option("--n-od", default=64, type=int)
@click.option("--demand-scale", default=400.0, type=float)
def gen_network(out, demand_out, seed, width, height, n_od, demand_scale):
    """Generate a synthetic gridded city and its OD demand table."""
    cfg = synth.CityConfig(width=width, height=height, seed=seed, n_od=n_od,
                           demand_scale=demand_scale)
    net, demand = synth.generate_city(cfg)
    save_network(net, out)
    oracle_mod.save_demand(demand, demand_out)
    click.echo(f"wrote {len(net.nodes)} nodes, {len(net.edges)} edges, "
               f"{len(demand)} OD pairs")


@main.command("gen-scenarios")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--n", default=200, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--reduction", default=0.5, type=float)
@click.option("--include-singletons", is_flag=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--split-out", required=True, type=click.Path())
def gen_scenarios(network_path, n, seed, reduction, include_singletons, out,
                  split_out):
    """Sample connected district subsets and write the train split manifest."""
    net = load_network(network_path)
    adjacency = net.district_graph()
    scenarios = scen_mod.sample_scenarios(adjacency, n, seed=seed,
                                          include_singletons=include_singletons,
                                          reduction=reduction)
    split = scen_mod.split_scenarios(scenarios, seed=seed)
    scen_mod.save_scenarios(scenarios, out)
    scen_mod.save_split(split, split_out)
    click.echo(f"wrote {len(scenarios)} scenarios "
               f"(mean subset size {split.stats['mean_subset_size']:.2f})")


@main.command("run-oracle")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--demand", "demand_path", required=True, type=click.Path(exists=True))
@click.option("--scenarios", "scenarios_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--workers", default=1, type=int)
@click.option("--base-seeds", default=50, type=int,
              help="number of status-quo runs averaged into the base volume")
def run_oracle(network_path, demand_path, scenarios_path, config_path, out_dir,
               workers, base_seeds):
    """Equilibrium volumes for the base network and every policy scenario."""
    net = load_network(network_path)
    demand = oracle_mod.load_demand(demand_path)
    scenarios = scen_mod.load_scenarios(scenarios_path)
    cost, config = _oracle_setup(config_path)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = oracle_mod.base_volume(net, demand, cost, config, n_seeds=base_seeds)
    oracle_mod.save_volumes_csv(base, net, out / "base.csv")
    results = oracle_mod.run_scenarios(net, demand, cost, config, scenarios,
                                       workers=workers)
    for sid, vol in results.items():
        oracle_mod.save_volumes_csv(vol, net, out / f"{sid}.csv")
    click.echo(f"wrote base.csv and {len(results)} scenario volume files")


@main.command("build-dataset")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--scenarios", "scenarios_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--volumes", "volumes_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def build_dataset(network_path, scenarios_path, split_path, volumes_dir, out_dir):
    """Assemble standardizable per-dual-node samples from oracle outputs."""
    net = load_network(network_path)
    dual = build_dual(net)
    scenarios = scen_mod.load_scenarios(scenarios_path)
    split = scen_mod.load_split(split_path)
    volumes_dir = Path(volumes_dir)
    base = oracle_mod.load_volumes_csv(volumes_dir / "base.csv")
    by_scenario = {s.id: oracle_mod.load_volumes_csv(volumes_dir / f"{s.id}.csv")
                   for s in scenarios}
    ds = ds_mod.build_dataset(net, dual, scenarios, split, base, by_scenario)
    ds_mod.save_dataset(ds, out_dir)
    click.echo(f"wrote dataset with {len(ds.samples)} samples to {out_dir}")


@main.command("train")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_cmd(dataset_dir, config_path, out_dir):
    """Train the surrogate; writes checkpoint dir and run log CSV."""
    ds = ds_mod.load_dataset(dataset_dir)
    raw = json.loads(Path(config_path).read_text(encoding="utf-8")) \
        if config_path else {}
    model_cfg = GnnConfig.from_dict(raw.pop("model")) if "model" in raw \
        else GnnConfig()
    config = TrainConfig(**raw)
    model = init(GnnModel(model_cfg), seed=config.seed)
    model, log = run_training(model, ds, config)
    out = Path(out_dir)
    save_checkpoint(model, out, ds.feature_spec_version, ds.scaler.to_dict(),
                    extra={"best_epoch": log.best_epoch,
                           "epochs_run": len(log.records)})
    log.to_csv(out / "runlog.csv")
    best = min(r.val_mse for r in log.records)
    click.echo(f"trained {len(log.records)} epochs; "
               f"best val MSE {best:.6f} at epoch {log.best_epoch}")


@main.command("evaluate")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--scenarios", "scenarios_path", required=True, type=click.Path(exists=True))
@click.option("--split", "split_name", default="test",
              type=click.Choice(["train", "validation", "test"]))
@click.option("--report-out", type=click.Path())
def evaluate(dataset_dir, ckpt_dir, network_path, scenarios_path, split_name,
             report_out):
    """Per-road-subset report over an evaluation split."""
    net = load_network(network_path)
    ds = ds_mod.load_dataset(dataset_dir)
    model, manifest = load_checkpoint(ckpt_dir)
    if manifest.get("feature_spec_version") != ds.feature_spec_version:
        raise click.ClickException("checkpoint/dataset feature spec mismatch")
    scenarios = {s.id: s for s in scen_mod.load_scenarios(scenarios_path)}
    ids = getattr(ds.split, split_name)

    y_true, y_pred = {}, {}
    for sid in ids:
        raw_sample = ds.samples[sid]
        std = ds_mod.transform(raw_sample, ds.scaler)
        pred_std = model.predict(std.features, std.positions, std.edge_index)
        y_pred[sid] = ds_mod.inverse_transform_target(pred_std, ds.scaler)
        y_true[sid] = raw_sample.targets
    report = metrics_mod.evaluate_subsets(net, [scenarios[i] for i in ids],
                                          y_true, y_pred)
    click.echo(report.to_text())
    if report_out:
        report.to_csv(report_out)


@main.command("serve")
@click.option("--network", "network_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--base-volumes", "base_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=None, type=int,
              help="defaults to the PORT env var, else 8000")
def serve(network_path, ckpt_dir, base_path, host, port):
    """Serve what-if predictions over HTTP."""
    import uvicorn

    from .service import app_from_checkpoint

    net = load_network(network_path)
    base = oracle_mod.load_volumes_csv(base_path)
    app = app_from_checkpoint(net, ckpt_dir, base)
    if port is None:
        port = int(os.environ.get("PORT", "8000"))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
