"""Training loop: AdamW, linear warmup + cosine decay, gradient accumulation,
global-norm clipping, early stopping, and run logging."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, GraphSample
from .metrics import mse, r_squared
from .nn.model import GnnModel
from .nn.tensor import Tensor


@dataclass
class TrainConfig:
    max_epochs: int = 2000
    patience: int = 50
    batch_size: int = 8
    accumulation_every: int = 3
    clip_norm: float = 1.0
    peak_lr: float = 0.001
    warmup_steps: int = 20000
    weight_decay: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    min_improvement: float = 1e-6

    def __post_init__(self):
        if self.accumulation_every < 1:
            raise ValueError("accumulation_every must be >= 1")
        for name in ("max_epochs", "patience", "batch_size",
                     "warmup_steps", "clip_norm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.peak_lr < 0:
            raise ValueError("peak_lr must be >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    val_r2: float
    lr: float
    seconds: float


@dataclass
class RunLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_mse", "val_mse", "val_r2", "lr"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.train_mse), repr(r.val_mse),
                                 repr(r.val_r2), repr(r.lr)])


def lr_at(step: int, config: TrainConfig, total_steps: int) -> float:
    """Linear warmup to peak_lr over warmup_steps, then cosine decay to 0."""
    if step <= config.warmup_steps:
        return config.peak_lr * step / config.warmup_steps
    frac = (step - config.warmup_steps) / (total_steps - config.warmup_steps)
    frac = min(frac, 1.0)
    return config.peak_lr * 0.5 * (1.0 + math.cos(math.pi * frac))


def total_optimizer_steps(n_train: int, config: TrainConfig) -> int:
    """Steps available for the cosine schedule:
    max_epochs * ceil(ceil(n_train / batch_size) / accumulation_every)."""
    batches = math.ceil(n_train / config.batch_size)
    return config.max_epochs * math.ceil(batches / config.accumulation_every)


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params: list[Tensor], config: TrainConfig):
        self.params = params
        self.config = config
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self, lr: float):
        c = self.config
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            self.m[i] = c.beta1 * self.m[i] + (1 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1 - c.beta2) * g * g
            m_hat = self.m[i] / (1 - c.beta1 ** self.t)
            v_hat = self.v[i] / (1 - c.beta2 ** self.t)
            p.data -= lr * (m_hat / (np.sqrt(v_hat) + c.eps)
                            + c.weight_decay * p.data)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def clip_global_norm(params: list[Tensor], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad ** 2).sum())
    norm = math.sqrt(total)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def sample_loss(model: GnnModel, sample: GraphSample) -> Tensor:
    pred = model.forward(sample.features, sample.positions, sample.edge_index)
    return ((pred - Tensor(sample.targets)) ** 2).mean()


def batch_loss(model: GnnModel, samples: list[GraphSample]) -> Tensor:
    """MSE over one block-diagonal forward of several graph samples.

    Equals the mean of per-sample MSEs when node counts match (always the
    case for scenarios sharing one dual graph).
    """
    if len(samples) == 1:
        return sample_loss(model, samples[0])
    feats = np.concatenate([s.features for s in samples])
    pos = np.concatenate([s.positions for s in samples])
    targets = np.concatenate([s.targets for s in samples])
    offsets = np.cumsum([0] + [s.n_nodes for s in samples[:-1]])
    edge_index = np.concatenate([
        np.asarray(s.edge_index, dtype=np.int64) + off
        for s, off in zip(samples, offsets)])
    pred = model.forward(feats, pos, edge_index)
    return ((pred - Tensor(targets)) ** 2).mean()


def validate(model: GnnModel, samples: list[GraphSample]) -> tuple[float, float]:
    """(MSE, R^2) over the concatenation of all edges of all samples."""
    if not samples:
        raise ValueError("empty validation set")
    y = np.concatenate([s.targets for s in samples])
    preds = []
    for i in range(0, len(samples), 16):
        chunk = samples[i:i + 16]
        feats = np.concatenate([s.features for s in chunk])
        pos = np.concatenate([s.positions for s in chunk])
        offsets = np.cumsum([0] + [s.n_nodes for s in chunk[:-1]])
        edge_index = np.concatenate([
            np.asarray(s.edge_index, dtype=np.int64) + off
            for s, off in zip(chunk, offsets)])
        preds.append(model.predict(feats, pos, edge_index))
    y_hat = np.concatenate(preds)
    return mse(y, y_hat), r_squared(y, y_hat)


def _snapshot(model: GnnModel) -> list[np.ndarray]:
    return [p.data.copy() for p in model.parameters()]


def _restore(model: GnnModel, snap: list[np.ndarray]) -> None:
    for p, d in zip(model.parameters(), snap):
        p.data[...] = d


def train(model: GnnModel, dataset: Dataset,
          config: TrainConfig) -> tuple[GnnModel, RunLog]:
    """Train in place; returns the model restored to its best validation
    checkpoint, plus the run log. Deterministic for a fixed seed."""
    train_samples = dataset.standardized(dataset.split.train)
    val_samples = dataset.standardized(dataset.split.validation)
    if not train_samples or not val_samples:
        raise ValueError("train and validation splits must be nonempty")

    params = model.parameters()
    optimizer = AdamW(params, config)
    total_steps = total_optimizer_steps(len(train_samples), config)
    log = RunLog()
    best_val = math.inf
    best_snap = _snapshot(model)
    stale = 0
    step = 0

    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        rng = np.random.default_rng((config.seed, epoch))
        order = rng.permutation(len(train_samples))
        batches = [order[i:i + config.batch_size]
                   for i in range(0, len(order), config.batch_size)]

        epoch_losses = []
        acc_count = 0
        optimizer.zero_grad()
        for bi, batch in enumerate(batches):
            # losses average over accumulated batches so the effective lr
            # stays schedule-faithful
            loss = batch_loss(model, [train_samples[i] for i in batch]) \
                * (1.0 / config.accumulation_every)
            loss.backward()
            epoch_losses.append(float(loss.data) * config.accumulation_every)
            acc_count += 1
            if acc_count == config.accumulation_every or bi == len(batches) - 1:
                step += 1
                clip_global_norm(params, config.clip_norm)
                optimizer.step(lr_at(step, config, total_steps))
                optimizer.zero_grad()
                acc_count = 0

        train_mse = float(np.mean(epoch_losses))
        if math.isnan(train_mse):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        val_mse, val_r2 = validate(model, val_samples)
        log.records.append(EpochRecord(epoch, train_mse, val_mse, val_r2,
                                       lr_at(step, config, total_steps),
                                       time.perf_counter() - t0))
        if val_mse < best_val - config.min_improvement:
            best_val = val_mse
            best_snap = _snapshot(model)
            log.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    _restore(model, best_snap)
    return model, log
