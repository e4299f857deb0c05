"""Network layers: linear, PointNet-style graph convolution, graph attention."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, concat_cols, segment_max, segment_sum


def message_edges(n_nodes: int, edge_index: np.ndarray):
    """Message-passing structure: dual edges plus self-loops, sorted by
    (destination, source) so segment operations and tie-breaking are stable."""
    edge_index = np.asarray(edge_index, dtype=np.int64).reshape(-1, 2)
    loops = np.arange(n_nodes, dtype=np.int64)
    src = np.concatenate([edge_index[:, 0], loops])
    dst = np.concatenate([edge_index[:, 1], loops])
    order = np.lexsort((src, dst))
    return src[order], dst[order]


class Linear:
    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Tensor(np.zeros((in_dim, out_dim)), requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias

    def parameters(self):
        return [self.weight, self.bias]


class PointNetConv:
    """Graph convolution in the PointNet style.

    Per message j -> i: local([x_j, p_j - p_i]) through a single ReLU linear
    layer, aggregated per destination (max by default, self-loop included),
    then a global MLP with ReLU between layers.
    """

    def __init__(self, in_dim: int, local_dim: int = 256,
                 global_dims: tuple = (256, 512, 256, 512),
                 aggregation: str = "max"):
        if aggregation not in ("max", "sum", "mean"):
            raise ValueError(f"unknown aggregation {aggregation!r}")
        self.in_dim = in_dim
        self.aggregation = aggregation
        self.local = Linear(in_dim + 2, local_dim)
        dims = (local_dim,) + tuple(global_dims)
        self.global_mlp = [Linear(dims[i], dims[i + 1])
                           for i in range(len(global_dims))]
        self.out_dim = dims[-1]

    def __call__(self, x: Tensor, pos: np.ndarray, src: np.ndarray,
                 dst: np.ndarray, n: int) -> Tensor:
        rel = Tensor(pos[src] - pos[dst])
        msg = concat_cols([x.take_rows(src), rel])
        z = self.local(msg).relu()
        if self.aggregation == "max":
            h = segment_max(z, dst, n)
        elif self.aggregation == "sum":
            h = segment_sum(z, dst, n)
        else:
            counts = np.bincount(dst, minlength=n).astype(np.float64)
            h = segment_sum(z, dst, n) * Tensor(1.0 / counts[:, None])
        for i, lin in enumerate(self.global_mlp):
            h = lin(h)
            if i < len(self.global_mlp) - 1:
                h = h.relu()
        return h

    def parameters(self):
        params = self.local.parameters()
        for lin in self.global_mlp:
            params += lin.parameters()
        return params


class GatLayer:
    """Single-layer graph attention (optionally multi-head, concatenated).

    logit(i, j) = leaky_relu(a_src . W x_j + a_dst . W x_i), softmax over the
    in-neighborhood of i (self-loop included), output = attention-weighted
    sum of W x_j.
    """

    def __init__(self, in_dim: int, out_dim: int, heads: int = 1,
                 negative_slope: float = 0.2):
        if out_dim % heads != 0:
            raise ValueError("out_dim must be divisible by heads")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.heads = heads
        self.negative_slope = negative_slope
        d = out_dim // heads
        self.weights = [Tensor(np.zeros((in_dim, d)), requires_grad=True)
                        for _ in range(heads)]
        self.att_src = [Tensor(np.zeros(d), requires_grad=True)
                        for _ in range(heads)]
        self.att_dst = [Tensor(np.zeros(d), requires_grad=True)
                        for _ in range(heads)]

    def _head(self, k: int, x: Tensor, src, dst, n: int,
              return_alpha: bool = False):
        h = x @ self.weights[k]
        hs = h.take_rows(src)
        hd = h.take_rows(dst)
        logits = ((hs * self.att_src[k]).sum(axis=1)
                  + (hd * self.att_dst[k]).sum(axis=1))
        logits = logits.leaky_relu(self.negative_slope).reshape(-1, 1)
        # shift by per-segment max for stability; softmax is shift-invariant,
        # so detaching the max leaves gradients exact
        m = segment_max(logits, dst, n).detach()
        ex = (logits - m.take_rows(dst)).exp()
        denom = segment_sum(ex, dst, n)
        alpha = ex / denom.take_rows(dst)
        out = segment_sum(hs * alpha, dst, n)
        return (out, alpha) if return_alpha else out

    def __call__(self, x: Tensor, src: np.ndarray, dst: np.ndarray,
                 n: int) -> Tensor:
        outs = [self._head(k, x, src, dst, n) for k in range(self.heads)]
        return outs[0] if self.heads == 1 else concat_cols(outs)

    def attention(self, x: Tensor, src, dst, n: int) -> np.ndarray:
        """Attention coefficients of head 0, one per message edge."""
        _, alpha = self._head(0, x, src, dst, n, return_alpha=True)
        return alpha.data[:, 0]

    def parameters(self):
        params = []
        for k in range(self.heads):
            params += [self.weights[k], self.att_src[k], self.att_dst[k]]
        return params
