"""The surrogate model: PointNet-style conv into a GAT stack with a linear
output head, plus initialization, parameter counting, and checkpoint I/O."""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .tensor import Tensor
from .layers import GatLayer, Linear, PointNetConv, message_edges

CHECKPOINT_MAGIC = b"GNNW"
CHECKPOINT_VERSION = 1


@dataclass
class GnnConfig:
    in_dim: int = 9
    conv_local: int = 256
    conv_global: tuple = (256, 512, 256, 512)
    gat_sizes: tuple = (512, 512, 256, 128, 64)
    heads: int = 1
    aggregation: str = "max"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_global"] = list(self.conv_global)
        d["gat_sizes"] = list(self.gat_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GnnConfig":
        return cls(in_dim=d["in_dim"], conv_local=d["conv_local"],
                   conv_global=tuple(d["conv_global"]),
                   gat_sizes=tuple(d["gat_sizes"]),
                   heads=d.get("heads", 1),
                   aggregation=d.get("aggregation", "max"))


class GnnModel:
    def __init__(self, config: GnnConfig | None = None):
        self.config = config or GnnConfig()
        c = self.config
        self.conv = PointNetConv(c.in_dim, c.conv_local, c.conv_global,
                                 c.aggregation)
        self.gats = []
        prev = self.conv.out_dim
        for size in c.gat_sizes:
            self.gats.append(GatLayer(prev, size, heads=c.heads))
            prev = size
        self.head = Linear(prev, 1)

    def parameters(self) -> list[Tensor]:
        params = self.conv.parameters()
        for gat in self.gats:
            params += gat.parameters()
        params += self.head.parameters()
        return params

    def forward(self, features: np.ndarray, positions: np.ndarray,
                edge_index: np.ndarray) -> Tensor:
        """Predictions for one graph sample, shape (n_dual_nodes,)."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[1] != self.config.in_dim:
            raise ValueError(f"feature dim {features.shape[1]} != model input "
                             f"dim {self.config.in_dim}")
        n = features.shape[0]
        src, dst = message_edges(n, edge_index)
        h = self.conv(Tensor(features), np.asarray(positions, dtype=np.float64),
                      src, dst, n)
        h = h.relu()
        for gat in self.gats:
            h = gat(h, src, dst, n).relu()
        return self.head(h).reshape(-1)

    def predict(self, features, positions, edge_index) -> np.ndarray:
        return self.forward(features, positions, edge_index).data

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def count_parameters(model: GnnModel) -> int:
    return sum(p.data.size for p in model.parameters())


def parameter_table(model: GnnModel) -> list[tuple[str, int]]:
    """Per-block parameter counts (for run manifests and docs)."""
    rows = [("conv", sum(p.data.size for p in model.conv.parameters()))]
    for i, gat in enumerate(model.gats):
        rows.append((f"gat{i}", sum(p.data.size for p in gat.parameters())))
    rows.append(("head", sum(p.data.size for p in model.head.parameters())))
    return rows


def init(model: GnnModel, seed: int = 0) -> GnnModel:
    """Xavier-normal for linear/GAT weights, Kaiming-normal for the
    PointNet-conv internals; biases zero. In place, deterministic per seed."""
    rng = np.random.default_rng(seed)

    def kaiming(t: Tensor, fan_in: int):
        t.data[...] = rng.standard_normal(t.data.shape) * np.sqrt(2.0 / fan_in)

    def xavier(t: Tensor, fan_in: int, fan_out: int):
        t.data[...] = rng.standard_normal(t.data.shape) * np.sqrt(
            2.0 / (fan_in + fan_out))

    for lin in [model.conv.local] + model.conv.global_mlp:
        kaiming(lin.weight, lin.in_dim)
        lin.bias.data[...] = 0.0
    for gat in model.gats:
        d = gat.out_dim // gat.heads
        for k in range(gat.heads):
            xavier(gat.weights[k], gat.in_dim, d)
            xavier(gat.att_src[k], d, 1)
            xavier(gat.att_dst[k], d, 1)
    xavier(model.head.weight, model.head.in_dim, model.head.out_dim)
    model.head.bias.data[...] = 0.0
    return model


# --- checkpoint I/O --------------------------------------------------------

def _weights_blob(model: GnnModel) -> bytes:
    params = model.parameters()
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(params))]
    for p in params:
        shape = p.data.shape
        parts.append(struct.pack("<I", len(shape)))
        parts.append(struct.pack(f"<{len(shape)}I", *shape))
    for p in params:
        parts.append(p.data.astype("<f4").tobytes())
    return b"".join(parts)


def checkpoint_id(model: GnnModel) -> str:
    return hashlib.sha256(_weights_blob(model)).hexdigest()[:16]


def save_checkpoint(model: GnnModel, out_dir, feature_spec_version: str = "",
                    scaler: dict | None = None, extra: dict | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blob = _weights_blob(model)
    manifest = {
        "architecture": model.config.to_dict(),
        "feature_spec_version": feature_spec_version,
        "scaler": scaler,
        "checkpoint_id": hashlib.sha256(blob).hexdigest()[:16],
        "parameter_count": count_parameters(model),
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1), encoding="utf-8")
    (out_dir / "weights.bin").write_bytes(blob)


def load_checkpoint(ckpt_dir) -> tuple[GnnModel, dict]:
    ckpt_dir = Path(ckpt_dir)
    manifest = json.loads((ckpt_dir / "manifest.json").read_text(encoding="utf-8"))
    model = GnnModel(GnnConfig.from_dict(manifest["architecture"]))
    blob = (ckpt_dir / "weights.bin").read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError("bad checkpoint magic")
    version, n_params = struct.unpack_from("<II", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    off = 12
    shapes = []
    for _ in range(n_params):
        (ndim,) = struct.unpack_from("<I", blob, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", blob, off)
        off += 4 * ndim
        shapes.append(shape)
    params = model.parameters()
    if len(params) != n_params:
        raise ValueError("checkpoint parameter count mismatch")
    for p, shape in zip(params, shapes):
        if p.data.shape != shape:
            raise ValueError(f"shape mismatch: {p.data.shape} vs {shape}")
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
        off += 4 * count
        p.data[...] = arr.reshape(shape).astype(np.float64)
    return model, manifest
