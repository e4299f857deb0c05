"""What-if prediction service: wraps a trained checkpoint behind a small
JSON/HTTP API for the planner UI."""
from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .dataset import (FEATURE_DIM, FEATURE_SPEC_VERSION, Scaler,
                      inverse_transform_target)
from .network import DualGraph, RoadNetwork, HIGHWAY_CLASSES, build_dual
from .nn.model import GnnModel, load_checkpoint
from .oracle import POLICY_CLASSES


class WhatIfRequest(BaseModel):
    districts: list[str] = Field(default_factory=list)
    edges: list[str] = Field(default_factory=list)
    reduction: float


class EdgePrediction(BaseModel):
    edge_id: str
    delta_volume: float
    percent_change: float | None
    base_volume: float


class WhatIfResponse(BaseModel):
    predictions: list[EdgePrediction]
    checkpoint_id: str
    scaler_version: str
    latency_ms: float


class ServiceState:
    def __init__(self, net: RoadNetwork, model: GnnModel, scaler: Scaler,
                 base_volumes: dict[str, float], checkpoint_id: str,
                 max_edges: int = 10000):
        self.net = net
        self.dual: DualGraph = build_dual(net)
        self.model = model
        self.scaler = scaler
        self.base_volumes = base_volumes
        self.checkpoint_id = checkpoint_id
        self.max_edges = max_edges
        self.districts = set(net.districts)
        self.edge_ids = set(net.edge_index)

    def build_features(self, districts: set[str], edges: set[str],
                       reduction: float) -> np.ndarray:
        dual = self.dual
        features = np.zeros((dual.n_nodes, FEATURE_DIM))
        for i, eid in enumerate(dual.edge_ids):
            e = self.net.edge(eid)
            reduced = ((e.district in districts
                        and e.highway_class in POLICY_CLASSES)
                       or eid in edges)
            features[i, 0] = self.base_volumes[eid]
            features[i, 1] = e.capacity
            features[i, 2 + HIGHWAY_CLASSES.index(e.highway_class)] = 1.0
            features[i, 6] = dual.positions[i, 0]
            features[i, 7] = dual.positions[i, 1]
            features[i, 8] = reduction if reduced else 0.0
        return features

    def predict(self, req: WhatIfRequest) -> WhatIfResponse:
        t0 = time.perf_counter()
        if not (0.0 <= req.reduction <= 1.0):
            raise HTTPException(422, f"reduction {req.reduction} outside [0, 1]")
        if not req.districts and not req.edges:
            raise HTTPException(422, "at least one district or edge required")
        if len(req.edges) > self.max_edges:
            raise HTTPException(413, f"edge list exceeds cap of {self.max_edges}")
        unknown = [d for d in req.districts if d not in self.districts]
        if unknown:
            raise HTTPException(422, f"unknown district id(s): {unknown}")
        unknown_e = [e for e in req.edges if e not in self.edge_ids]
        if unknown_e:
            raise HTTPException(422, f"unknown edge id(s): {unknown_e}")

        raw = self.build_features(set(req.districts), set(req.edges),
                                  req.reduction)
        feats = (raw - self.scaler.feature_mean) / self.scaler.feature_std
        y_std = self.model.predict(feats, self.dual.positions,
                                   self.dual.edge_index_array())
        y = inverse_transform_target(y_std, self.scaler)
        preds = []
        for i, eid in enumerate(self.dual.edge_ids):
            b = self.base_volumes[eid]
            pct = None if b == 0 else float(100.0 * y[i] / b)
            preds.append(EdgePrediction(edge_id=eid, delta_volume=float(y[i]),
                                        percent_change=pct, base_volume=b))
        return WhatIfResponse(
            predictions=preds,
            checkpoint_id=self.checkpoint_id,
            scaler_version=FEATURE_SPEC_VERSION,
            latency_ms=(time.perf_counter() - t0) * 1000.0,
        )


def create_app(net: RoadNetwork, model: GnnModel, scaler: Scaler,
               base_volumes: dict[str, float], checkpoint_id: str,
               feature_spec_version: str = FEATURE_SPEC_VERSION,
               max_edges: int = 10000) -> FastAPI:
    if feature_spec_version != FEATURE_SPEC_VERSION:
        raise ValueError(
            f"checkpoint feature spec {feature_spec_version!r} does not match "
            f"builder version {FEATURE_SPEC_VERSION!r}")
    missing = [e.id for e in net.edges if e.id not in base_volumes]
    if missing:
        raise ValueError(f"base volumes missing for edges: {missing[:5]}")

    state = ServiceState(net, model, scaler, base_volumes, checkpoint_id,
                         max_edges)
    app = FastAPI(title="dualflow policy service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.dualflow = state

    @app.get("/health")
    def health():
        return {"status": "ok", "checkpoint_id": state.checkpoint_id}

    @app.get("/network")
    def network():
        nodes = [{"id": n.id, "x": n.x, "y": n.y} for n in net.nodes]
        edges = [{"id": e.id, "from": e.from_node, "to": e.to_node,
                  "highway_class": e.highway_class, "district": e.district,
                  "base_volume": base_volumes[e.id]} for e in net.edges]
        return {"nodes": nodes, "edges": edges}

    @app.get("/districts")
    def districts():
        members: dict[str, list[str]] = {d: [] for d in net.districts}
        for e in net.edges:
            if e.district is not None:
                members[e.district].append(e.id)
        return {"ids": net.districts,
                "adjacency": [list(p) for p in net.district_adjacency],
                "member_edges": members}

    @app.post("/predict", response_model=WhatIfResponse)
    def predict(req: WhatIfRequest):
        return state.predict(req)

    return app


def app_from_checkpoint(net: RoadNetwork, ckpt_dir,
                        base_volumes: dict[str, float],
                        max_edges: int = 10000) -> FastAPI:
    model, manifest = load_checkpoint(ckpt_dir)
    scaler = Scaler.from_dict(manifest["scaler"])
    return create_app(net, model, scaler, base_volumes,
                      manifest["checkpoint_id"],
                      manifest.get("feature_spec_version", ""),
                      max_edges)
