"""Feature/target assembly for dual-graph samples, standardization, and the
on-disk dataset format (manifest JSON + one "GSAM" binary record per scenario).
"""
from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import DualGraph, RoadNetwork, HIGHWAY_CLASSES
from .oracle import POLICY_CLASSES
from .scenarios import PolicyScenario, ScenarioSplit

FEATURE_SPEC_VERSION = "dualflow-features-1"
FEATURE_NAMES = ("base_volume", "base_capacity",
                 "class_primary", "class_secondary", "class_tertiary",
                 "class_other", "pos_x", "pos_y", "capacity_reduction")
FEATURE_DIM = len(FEATURE_NAMES)

GSAM_MAGIC = b"GSAM"
GSAM_VERSION = 1


@dataclass
class GraphSample:
    scenario_id: str
    features: np.ndarray       # (n, FEATURE_DIM)
    positions: np.ndarray      # (n, 2), raw midpoints for the conv layer
    targets: np.ndarray        # (n,)
    edge_index: np.ndarray     # (m, 2) uint32 dual edges

    @property
    def n_nodes(self) -> int:
        return self.features.shape[0]


@dataclass
class Scaler:
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float
    target_std: float

    def to_dict(self) -> dict:
        return {"feature_mean": self.feature_mean.tolist(),
                "feature_std": self.feature_std.tolist(),
                "target_mean": self.target_mean,
                "target_std": self.target_std}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["feature_mean"], dtype=np.float64),
                   np.asarray(d["feature_std"], dtype=np.float64),
                   float(d["target_mean"]), float(d["target_std"]))


def build_sample(net: RoadNetwork, dual: DualGraph, scenario: PolicyScenario,
                 base_volumes: dict[str, float],
                 scenario_volumes: dict[str, float]) -> GraphSample:
    """Assemble raw (unstandardized) features and targets y = v - b."""
    n = dual.n_nodes
    features = np.zeros((n, FEATURE_DIM))
    targets = np.zeros(n)
    for i, eid in enumerate(dual.edge_ids):
        e = net.edge(eid)
        if eid not in base_volumes or eid not in scenario_volumes:
            raise KeyError(f"missing volume for edge {eid!r}")
        b = base_volumes[eid]
        v = scenario_volumes[eid]
        reduced = (e.district in scenario.districts
                   and e.highway_class in POLICY_CLASSES)
        features[i, 0] = b
        features[i, 1] = e.capacity
        features[i, 2 + HIGHWAY_CLASSES.index(e.highway_class)] = 1.0
        features[i, 6] = dual.positions[i, 0]
        features[i, 7] = dual.positions[i, 1]
        features[i, 8] = scenario.reduction if reduced else 0.0
        targets[i] = v - b
    if not (np.isfinite(features).all() and np.isfinite(targets).all()):
        raise ValueError("non-finite value in features or targets")
    return GraphSample(scenario.id, features, dual.positions.copy(), targets,
                       dual.edge_index_array())


def fit_scaler(train_samples: list[GraphSample]) -> Scaler:
    """Per-feature/target mean and population std over all training edges.

    Zero-variance features keep std = 1 (with a warning) so standardization
    maps them to zero.
    """
    if not train_samples:
        raise ValueError("cannot fit scaler on empty training set")
    feats = np.concatenate([s.features for s in train_samples])
    targs = np.concatenate([s.targets for s in train_samples])
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    zero = std <= 0
    if zero.any():
        names = [FEATURE_NAMES[i] for i in np.nonzero(zero)[0]]
        warnings.warn(f"zero-variance feature(s) {names}; std set to 1",
                      stacklevel=2)
        std = np.where(zero, 1.0, std)
    t_std = targs.std()
    if t_std <= 0:
        warnings.warn("zero-variance targets; std set to 1", stacklevel=2)
        t_std = 1.0
    return Scaler(mean, std, float(targs.mean()), float(t_std))


def transform(sample: GraphSample, scaler: Scaler) -> GraphSample:
    # positions are standardized with the pos_x/pos_y feature statistics so
    # the conv layer sees relative offsets at unit scale
    pos_mean = scaler.feature_mean[6:8]
    pos_std = scaler.feature_std[6:8]
    return GraphSample(
        sample.scenario_id,
        (sample.features - scaler.feature_mean) / scaler.feature_std,
        (sample.positions - pos_mean) / pos_std,
        (sample.targets - scaler.target_mean) / scaler.target_std,
        sample.edge_index,
    )


def inverse_transform_target(values: np.ndarray, scaler: Scaler) -> np.ndarray:
    return np.asarray(values) * scaler.target_std + scaler.target_mean


# --- serialization ---------------------------------------------------------

def sample_to_bytes(sample: GraphSample) -> bytes:
    n, f = sample.features.shape
    m = sample.edge_index.shape[0]
    parts = [GSAM_MAGIC, struct.pack("<III", GSAM_VERSION, n, f),
             sample.features.astype("<f4").tobytes(),
             sample.positions.astype("<f4").tobytes(),
             sample.targets.astype("<f4").tobytes(),
             sample.edge_index.astype("<u4").tobytes()]
    return b"".join(parts)


def sample_from_bytes(blob: bytes, scenario_id: str) -> GraphSample:
    if blob[:4] != GSAM_MAGIC:
        raise ValueError("bad sample magic")
    version, n, f = struct.unpack_from("<III", blob, 4)
    if version != GSAM_VERSION:
        raise ValueError(f"unsupported sample version {version}")
    off = 16
    def take(count):
        nonlocal off
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
        off += 4 * count
        return arr.astype(np.float64)
    features = take(n * f).reshape(n, f)
    positions = take(n * 2).reshape(n, 2)
    targets = take(n)
    pairs = (len(blob) - off) // 8
    edge_index = np.frombuffer(blob, dtype="<u4", count=pairs * 2,
                               offset=off).reshape(pairs, 2).copy()
    return GraphSample(scenario_id, features, positions, targets, edge_index)


@dataclass
class Dataset:
    samples: dict[str, GraphSample]
    scaler: Scaler
    split: ScenarioSplit
    feature_spec_version: str = FEATURE_SPEC_VERSION
    meta: dict = field(default_factory=dict)

    def standardized(self, ids: list[str]) -> list[GraphSample]:
        return [transform(self.samples[i], self.scaler) for i in ids]


def build_dataset(net: RoadNetwork, dual: DualGraph,
                  scenarios: list[PolicyScenario], split: ScenarioSplit,
                  base_volumes: dict[str, float],
                  volumes_by_scenario: dict[str, dict[str, float]],
                  meta: dict | None = None) -> Dataset:
    samples = {s.id: build_sample(net, dual, s, base_volumes,
                                  volumes_by_scenario[s.id])
               for s in scenarios}
    scaler = fit_scaler([samples[i] for i in split.train])
    return Dataset(samples, scaler, split, meta=meta or {})


def save_dataset(ds: Dataset, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "feature_spec_version": ds.feature_spec_version,
        "feature_names": list(FEATURE_NAMES),
        "scaler": ds.scaler.to_dict(),
        "split": {"train": ds.split.train, "validation": ds.split.validation,
                  "test": ds.split.test, "seed": ds.split.seed,
                  "stats": ds.split.stats},
        "meta": ds.meta,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1),
                                           encoding="utf-8")
    for sid, sample in sorted(ds.samples.items()):
        (out_dir / f"{sid}.gsam").write_bytes(sample_to_bytes(sample))


def load_dataset(ds_dir) -> Dataset:
    ds_dir = Path(ds_dir)
    manifest = json.loads((ds_dir / "manifest.json").read_text(encoding="utf-8"))
    split = ScenarioSplit(manifest["split"]["train"],
                          manifest["split"]["validation"],
                          manifest["split"]["test"],
                          manifest["split"].get("seed", 0),
                          manifest["split"].get("stats", {}))
    samples = {}
    for path in sorted(ds_dir.glob("*.gsam")):
        sid = path.stem
        samples[sid] = sample_from_bytes(path.read_bytes(), sid)
    ds = Dataset(samples, Scaler.from_dict(manifest["scaler"]), split,
                 manifest["feature_spec_version"], manifest.get("meta", {}))
    return ds
