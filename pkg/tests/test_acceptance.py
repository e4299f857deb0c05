"""Acceptance suite. Each test prints one PASS/FAIL line for its criterion
(visible even under pytest's output capture)."""
import itertools
import time

import numpy as np
import pytest

from conftest import random_network
from dualflow import dataset as dsm
from dualflow.dataset import build_dataset
from dualflow.metrics import (baseline_mse, evaluate_subsets, mse, r_squared,
                              standard_subset_filters, variance_squared_diff)
from dualflow.network import Edge, Node, RoadNetwork, build_dual
from dualflow.nn.layers import GatLayer, Linear, PointNetConv, message_edges
from dualflow.nn.model import GnnConfig, GnnModel, init
from dualflow.nn.tensor import Tensor
from dualflow.oracle import (CostFunction, OdDemand, OracleConfig, assign,
                             base_volume, run_scenarios)
from dualflow.scenarios import (enumerate_connected_subsets, sample_scenarios,
                                split_scenarios)
from dualflow.synth import CityConfig, generate_city
from dualflow.training import TrainConfig, train, validate


def report(capsys, name: str, ok: bool, detail: str = ""):
    with capsys.disabled():
        line = f"{'PASS' if ok else 'FAIL'}: {name}"
        if detail:
            line += f"  [{detail}]"
        print(line, flush=True)
    assert ok, f"{name} ({detail})"


# --- 1. metric identities --------------------------------------------------

def test_metric_identities(capsys):
    rng = np.random.default_rng(0)
    ok = True
    for _ in range(200):
        n = int(rng.integers(2, 60))
        y = rng.standard_normal(n) * rng.uniform(0.1, 100)
        y_hat = y + rng.standard_normal(n)
        b = rng.uniform(-1e3, 1e3, n)
        # squared-error identity
        ok &= abs(mse(y, y_hat) - float(np.mean((y - y_hat) ** 2))) <= 1e-9
        # shift equivalence: errors in changes equal errors in absolute volumes
        ok &= abs(mse(y, y_hat) - mse(b + y, b + y_hat)) <= 1e-9 * max(
            1.0, mse(y, y_hat))
        # R^2 from its sum-of-squares definition
        ss_res = float(np.sum((y - y_hat) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        if ss_tot > 0:
            ok &= abs(r_squared(y, y_hat) - (1 - ss_res / ss_tot)) <= 1e-9
            # mean-predictor baseline MSE equals the population variance
            ok &= abs(baseline_mse(y) - ss_tot / n) <= 1e-9
            ok &= abs(r_squared(y, y_hat)
                      - (1 - mse(y, y_hat) / baseline_mse(y))) <= 1e-9
        # variance of the squared deviations from the mean change
        sq = (y - y.mean()) ** 2
        ok &= abs(variance_squared_diff(y)
                  - float(np.mean((sq - sq.mean()) ** 2))) <= 1e-9 * max(
            1.0, float(np.mean(sq)) ** 2)
    report(capsys, "metric identities agree to 1e-9", ok)


# --- 2. gradient correctness ----------------------------------------------

TEN_EDGES = np.array([[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0],
                      [0, 3], [2, 5], [1, 4], [4, 2]])
N_FIX = 6


def _numeric(loss_fn, params, eps=1e-6):
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p.data[idx]
            p.data[idx] = orig + eps
            up = loss_fn()
            p.data[idx] = orig - eps
            dn = loss_fn()
            p.data[idx] = orig
            g[idx] = (up - dn) / (2 * eps)
        grads.append(g)
    return grads


def _max_rel_err(loss_tensor_fn, params):
    for p in params:
        p.zero_grad()
    loss_tensor_fn().backward()
    numeric = _numeric(lambda: float(loss_tensor_fn().data), params)
    worst = 0.0
    for p, num in zip(params, numeric):
        scale = max(np.abs(num).max(), np.abs(p.grad).max(), 1e-8)
        worst = max(worst, float(np.abs(p.grad - num).max() / scale))
    return worst


def test_gradient_correctness(capsys):
    worst = 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((N_FIX, 3))
        pos = rng.standard_normal((N_FIX, 2))
        src, dst = message_edges(N_FIX, TEN_EDGES)

        lin = Linear(3, 4)
        conv = PointNetConv(3, local_dim=4, global_dims=(4, 3))
        gat = GatLayer(3, 4)
        for layer in (lin, conv, gat):
            for p in layer.parameters():
                p.data[...] = rng.standard_normal(p.data.shape) * 0.4

        worst = max(worst, _max_rel_err(
            lambda: (lin(Tensor(x)) ** 2).sum(), lin.parameters()))
        worst = max(worst, _max_rel_err(
            lambda: (conv(Tensor(x), pos, src, dst, N_FIX) ** 2).sum(),
            conv.parameters()))
        worst = max(worst, _max_rel_err(
            lambda: (gat(Tensor(x), src, dst, N_FIX) ** 2).sum(),
            gat.parameters()))

        model = init(GnnModel(GnnConfig(in_dim=3, conv_local=4,
                                        conv_global=(4,), gat_sizes=(4,))),
                     seed=seed)
        target = rng.standard_normal(N_FIX)

        def model_loss():
            diff = model.forward(x, pos, TEN_EDGES) - Tensor(target)
            return (diff ** 2).mean()

        worst = max(worst, _max_rel_err(model_loss, model.parameters()))
    report(capsys, "analytic gradients match finite differences "
           "(per layer + composed, 3 seeds, 10-edge fixture)",
           worst < 1e-4, f"max rel err {worst:.2e}")


# --- 3. oracle analytic fixtures ------------------------------------------

def _two_route(a1, a2, b1=0.1, b2=0.1):
    nodes = [Node("A", 0, 0), Node("M1", 1, 1), Node("M2", 1, -1),
             Node("B", 2, 0)]
    edges = [Edge("r1a", "A", "M1", 1000, 1, 100, "primary"),
             Edge("r1b", "M1", "B", 1000, 1, 100, "primary"),
             Edge("r2a", "A", "M2", 1000, 1, 100, "primary"),
             Edge("r2b", "M2", "B", 1000, 1, 100, "primary")]
    cost = CostFunction(kind="affine", a=(a1, 1e-9, a2, 1e-9),
                        b=(b1, 0.0, b2, 0.0))
    return RoadNetwork(nodes, edges), cost


def test_oracle_equilibrium_fixtures(capsys):
    gap_tol = 1e-6
    net, cost = _two_route(1.0, 1.0)
    sym = assign(net, [OdDemand("A", "B", 100, 1e9)], cost,
                 OracleConfig(max_iter=20000, gap_tol=gap_tol))
    sym_err = max(abs(sym.volume[0] - 50), abs(sym.volume[2] - 50))
    ok_sym = sym_err <= max(100 * gap_tol, 1e-3)

    net2, cost2 = _two_route(1.0, 2.0)
    asym = assign(net2, [OdDemand("A", "B", 15, 1e9)], cost2,
                  OracleConfig(max_iter=20000, gap_tol=1e-7))
    ok_asym = (abs(asym.volume[0] - 12.5) <= 0.05
               and abs(asym.volume[2] - 2.5) <= 0.05)

    net3, cost3 = _two_route(1.0, 1.7)
    res = assign(net3, [OdDemand("A", "B", 246.8, 1e9)], cost3,
                 OracleConfig(max_iter=20000, gap_tol=1e-8))
    out_of_origin = res.volume[0] + res.volume[2]
    ok_cons = abs(out_of_origin - 246.8) / 246.8 <= 1e-6

    report(capsys, "oracle symmetric two-route splits 50/50",
           ok_sym, f"err {sym_err:.2e}")
    report(capsys, "oracle asymmetric two-route hits (12.5, 2.5) +/- 0.05",
           ok_asym, f"got ({asym.volume[0]:.3f}, {asym.volume[2]:.3f})")
    report(capsys, "oracle conserves demand to 1e-6 relative",
           ok_cons, f"rel err {abs(out_of_origin - 246.8) / 246.8:.2e}")


# --- 4. subset enumeration vs brute force ---------------------------------

def _brute_force_subsets(adjacency):
    verts = sorted(adjacency)
    found = set()
    for r in range(1, len(verts) + 1):
        for combo in itertools.combinations(verts, r):
            sub = set(combo)
            stack, seen = [combo[0]], {combo[0]}
            while stack:
                for nb in adjacency[stack.pop()]:
                    if nb in sub and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            if seen == sub:
                found.add(frozenset(sub))
    return found


def test_enumeration_matches_brute_force(capsys):
    rng = np.random.default_rng(2024)
    ok = True
    for _ in range(50):
        n = int(rng.integers(1, 13))
        adj = {str(i): set() for i in range(n)}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.35:
                    adj[str(i)].add(str(j))
                    adj[str(j)].add(str(i))
        got = set(enumerate_connected_subsets(adj))
        ok &= (got == _brute_force_subsets(adj)) and len(got) == len(list(
            enumerate_connected_subsets(adj)))
    report(capsys, "connected-subset enumeration matches brute force "
           "(50 random graphs, <= 12 vertices)", ok)


# --- 5. line graph vs brute force -----------------------------------------

def test_line_graph_matches_brute_force(capsys):
    rng = np.random.default_rng(99)
    ok = True
    for _ in range(50):
        net = random_network(rng, n_nodes=int(rng.integers(3, 10)),
                             n_edges=int(rng.integers(2, 35)))
        kept = [e for e in net.edges if not e.is_loop]
        expected = {(i, j) for i, e1 in enumerate(kept)
                    for j, e2 in enumerate(kept)
                    if i != j and e1.to_node == e2.from_node}
        dual = build_dual(net, symmetric=False)
        ok &= set(dual.dual_edges) == expected
        sym = build_dual(net, symmetric=True)
        ok &= set(sym.dual_edges) == expected | {(b, a) for a, b in expected}
    report(capsys, "line-graph construction matches brute force "
           "(50 random networks)", ok)


# --- 6. desk-scale analog --------------------------------------------------

DESK_ORACLE = OracleConfig(max_iter=60, gap_tol=1e-3, mode_logit_scale=0.01,
                           noise_sigma=0.05, seed=0)
DESK_MODEL = GnnConfig(conv_local=32, conv_global=(32, 64),
                       gat_sizes=(64, 64, 32), heads=1)
DESK_TRAIN = TrainConfig(max_epochs=35, patience=50, batch_size=8,
                         accumulation_every=3, peak_lr=1e-3, warmup_steps=100,
                         seed=0)


def _run_pipeline(city_cfg, n_scenarios, oracle_cfg, model_cfg, train_cfg,
                  n_base_seeds, workers=4):
    net, demand = generate_city(city_cfg)
    dual = build_dual(net)
    cost = CostFunction(kind="bpr")
    scenarios = sample_scenarios(net.district_graph(), n_scenarios, seed=0,
                                 include_singletons=True)
    split = split_scenarios(scenarios, seed=0)
    base = base_volume(net, demand, cost, oracle_cfg, n_seeds=n_base_seeds)
    vols = run_scenarios(net, demand, cost, oracle_cfg, scenarios,
                         workers=workers)
    base_map = {e.id: base[i] for i, e in enumerate(net.edges)}
    vol_maps = {sid: {e.id: v[i] for i, e in enumerate(net.edges)}
                for sid, v in vols.items()}
    ds = build_dataset(net, dual, scenarios, split, base_map, vol_maps)
    model = init(GnnModel(model_cfg), seed=train_cfg.seed)
    model, log = train(model, ds, train_cfg)
    return net, scenarios, ds, model, log


def test_desk_scale_surrogate(capsys):
    t0 = time.perf_counter()
    net, scenarios, ds, model, log = _run_pipeline(
        CityConfig(seed=0), 180, DESK_ORACLE, DESK_MODEL, DESK_TRAIN,
        n_base_seeds=10)

    sizes_ok = (400 <= len(net.edges) <= 800 and len(net.districts) == 20
                and len(ds.samples) == 200
                and (len(ds.split.train), len(ds.split.validation),
                     len(ds.split.test)) == (160, 30, 10))
    report(capsys, "desk-scale corpus shape (20 districts, 400-800 edges, "
           "200 scenarios, 80/15/5)", sizes_ok,
           f"{len(net.edges)} edges, split {len(ds.split.train)}/"
           f"{len(ds.split.validation)}/{len(ds.split.test)}")

    test_samples = ds.standardized(ds.split.test)
    mse_t, r2_t = validate(model, test_samples)
    y = np.concatenate([s.targets for s in test_samples])
    base_t = baseline_mse(y)
    report(capsys, "desk-scale test MSE strictly below mean-baseline MSE",
           mse_t < base_t, f"model {mse_t:.4f} vs baseline {base_t:.4f}")
    report(capsys, "desk-scale test R^2 >= 0.2", r2_t >= 0.2,
           f"R^2 {r2_t:.3f}")

    # per-subset report with every required row type
    y_true, y_pred = {}, {}
    for sid in ds.split.test:
        std = dsm.transform(ds.samples[sid], ds.scaler)
        pred = model.predict(std.features, std.positions, std.edge_index)
        y_pred[sid] = dsm.inverse_transform_target(pred, ds.scaler)
        y_true[sid] = ds.samples[sid].targets
    by_id = {s.id: s for s in scenarios}
    rep = evaluate_subsets(net, [by_id[i] for i in ds.split.test],
                           y_true, y_pred)
    want = {f.name for f in standard_subset_filters()}
    got = {r.subset for r in rep.rows}
    report(capsys, "evaluation report contains every road-subset row type",
           want <= got, f"{len(got)} rows")
    with capsys.disabled():
        print(rep.to_text(), flush=True)

    elapsed = time.perf_counter() - t0
    report(capsys, "desk-scale experiment finishes within 30 minutes",
           elapsed <= 1800, f"{elapsed:.0f}s")


# --- 7. full-pipeline determinism -----------------------------------------

def test_pipeline_bit_exact_determinism(capsys):
    from dualflow.nn.model import _weights_blob

    cfg = CityConfig(width=5, height=4, districts_x=2, districts_y=2,
                     seed=3, n_od=10)
    oracle_cfg = OracleConfig(max_iter=30, gap_tol=1e-3,
                              mode_logit_scale=0.01, noise_sigma=0.05, seed=0)
    model_cfg = GnnConfig(conv_local=6, conv_global=(6, 5), gat_sizes=(5, 4))
    train_cfg = TrainConfig(max_epochs=3, patience=3, batch_size=4,
                            accumulation_every=2, peak_lr=1e-3,
                            warmup_steps=10, seed=0)

    outputs = []
    for workers in (1, 3):
        net, scenarios, ds, model, _ = _run_pipeline(
            cfg, 12, oracle_cfg, model_cfg, train_cfg, n_base_seeds=2,
            workers=workers)
        sample = ds.standardized(ds.split.test or ds.split.validation)[0]
        pred = model.predict(sample.features, sample.positions,
                             sample.edge_index)
        data_blob = b"".join(
            dsm.sample_to_bytes(ds.samples[sid])
            for sid in sorted(ds.samples))
        outputs.append((data_blob, _weights_blob(model), pred.tobytes()))

    ok = (outputs[0][0] == outputs[1][0]
          and outputs[0][1] == outputs[1][1]
          and outputs[0][2] == outputs[1][2])
    report(capsys, "full pipeline rerun (different worker counts) is "
           "bit-exact: dataset, weights, predictions", ok)
