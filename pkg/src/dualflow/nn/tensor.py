"""Minimal dense-tensor engine with reverse-mode gradients.

Covers exactly the operations the network needs: elementwise arithmetic with
broadcasting, matmul, ReLU variants, exp, reductions, row gather, segment
max/sum, and axis-1 concatenation. Buffers are float64.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple = ()
        self._backward = None

    # -- construction helpers ------------------------------------------------
    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic ----------------------------------------------------------
    @staticmethod
    def _wrap(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def __add__(self, other):
        other = self._wrap(other)
        def backward(grad, out):
            return (_unbroadcast(grad, self.shape),
                    _unbroadcast(grad, other.shape))
        return Tensor._from_op(self.data + other.data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        return Tensor._from_op(-self.data, (self,), lambda g, out: (-g,))

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) + (-self)

    def __mul__(self, other):
        other = self._wrap(other)
        def backward(grad, out):
            return (_unbroadcast(grad * other.data, self.shape),
                    _unbroadcast(grad * self.data, other.shape))
        return Tensor._from_op(self.data * other.data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._wrap(other)
        def backward(grad, out):
            return (_unbroadcast(grad / other.data, self.shape),
                    _unbroadcast(-grad * self.data / other.data ** 2, other.shape))
        return Tensor._from_op(self.data / other.data, (self, other), backward)

    def __pow__(self, p: float):
        def backward(grad, out):
            return (grad * p * self.data ** (p - 1),)
        return Tensor._from_op(self.data ** p, (self,), backward)

    def matmul(self, other: "Tensor") -> "Tensor":
        other = self._wrap(other)
        def backward(grad, out):
            return (grad @ other.data.T, self.data.T @ grad)
        return Tensor._from_op(self.data @ other.data, (self, other), backward)

    __matmul__ = matmul

    # -- nonlinearities ------------------------------------------------------
    def relu(self) -> "Tensor":
        mask = self.data > 0
        def backward(grad, out):
            return (grad * mask,)
        return Tensor._from_op(np.where(mask, self.data, 0.0), (self,), backward)

    def leaky_relu(self, slope: float = 0.2) -> "Tensor":
        mask = self.data > 0
        def backward(grad, out):
            return (grad * np.where(mask, 1.0, slope),)
        return Tensor._from_op(np.where(mask, self.data, slope * self.data),
                               (self,), backward)

    def exp(self) -> "Tensor":
        def backward(grad, out):
            return (grad * out.data,)
        return Tensor._from_op(np.exp(self.data), (self,), backward)

    # -- reductions ----------------------------------------------------------
    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        def backward(grad, out):
            g = grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape).copy(),)
        return Tensor._from_op(self.data.sum(axis=axis, keepdims=keepdims),
                               (self,), backward)

    def mean(self) -> "Tensor":
        n = self.data.size
        def backward(grad, out):
            return (np.broadcast_to(grad / n, self.shape).copy(),)
        return Tensor._from_op(self.data.mean(), (self,), backward)

    # -- structural ops ------------------------------------------------------
    def take_rows(self, idx: np.ndarray) -> "Tensor":
        idx = np.asarray(idx, dtype=np.int64)
        def backward(grad, out):
            g = np.zeros_like(self.data)
            _scatter_add_rows(g, idx, grad)
            return (g,)
        return Tensor._from_op(self.data[idx], (self,), backward)

    def reshape(self, *shape) -> "Tensor":
        old = self.data.shape
        def backward(grad, out):
            return (grad.reshape(old),)
        return Tensor._from_op(self.data.reshape(*shape), (self,), backward)

    # -- autodiff driver -----------------------------------------------------
    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen = set()
        def visit(t: Tensor):
            if id(t) in seen or not t.requires_grad:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)
        visit(self)

        grads = {id(self): np.ones_like(self.data)}
        for t in reversed(topo):
            grad = grads.pop(id(t), None)
            if grad is None:
                continue
            if not t._parents:
                t.grad = grad if t.grad is None else t.grad + grad
                continue
            parent_grads = t._backward(grad, t)
            for p, g in zip(t._parents, parent_grads):
                if not p.requires_grad or g is None:
                    continue
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + g
                else:
                    grads[id(p)] = g


def concat_cols(tensors: list[Tensor]) -> Tensor:
    """Concatenate 2-D tensors along axis 1."""
    widths = [t.data.shape[1] for t in tensors]
    offsets = np.cumsum([0] + widths)
    def backward(grad, out):
        return tuple(grad[:, offsets[i]:offsets[i + 1]]
                     for i in range(len(tensors)))
    return Tensor._from_op(np.concatenate([t.data for t in tensors], axis=1),
                           tensors, backward)


def _contiguous_starts(segments: np.ndarray, n_segments: int):
    """Row offsets per segment when ``segments`` is sorted and covers every
    id in 0..n_segments-1; None otherwise (slow path)."""
    if segments.size == 0 or segments.size < n_segments:
        return None
    if (np.diff(segments) < 0).any():
        return None
    starts = np.searchsorted(segments, np.arange(n_segments))
    counts = np.diff(np.append(starts, segments.size))
    if (counts == 0).any():
        return None
    return starts


def _scatter_add_rows(target: np.ndarray, idx: np.ndarray,
                      grad: np.ndarray) -> None:
    """target[idx] += grad with duplicate indices, via sort + reduceat."""
    if idx.size == 0:
        return
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    boundaries = np.flatnonzero(np.diff(sorted_idx)) + 1
    starts = np.concatenate(([0], boundaries))
    sums = np.add.reduceat(grad[order], starts, axis=0)
    target[sorted_idx[starts]] += sums


def segment_sum(values: Tensor, segments: np.ndarray, n_segments: int) -> Tensor:
    """Sum rows of ``values`` grouped by ``segments`` (len = rows)."""
    segments = np.asarray(segments, dtype=np.int64)
    starts = _contiguous_starts(segments, n_segments)
    if starts is not None:
        out = np.add.reduceat(values.data, starts, axis=0)
    else:
        out = np.zeros((n_segments,) + values.data.shape[1:])
        np.add.at(out, segments, values.data)
    def backward(grad, out_t):
        return (grad[segments],)
    return Tensor._from_op(out, (values,), backward)


def segment_max(values: Tensor, segments: np.ndarray, n_segments: int) -> Tensor:
    """Per-segment elementwise max over rows; every segment must be nonempty.

    Subgradient convention: ties route the gradient to the row with the
    lowest position in ``values``.
    """
    segments = np.asarray(segments, dtype=np.int64)
    vals = values.data
    n_rows = vals.shape[0]
    starts = _contiguous_starts(segments, n_segments)
    if starts is not None:
        out = np.maximum.reduceat(vals, starts, axis=0)
    else:
        out = np.full((n_segments,) + vals.shape[1:], -np.inf)
        np.maximum.at(out, segments, vals)
        if np.isneginf(out).any():
            raise ValueError("segment_max: empty segment")

    # winner row per (segment, channel): lowest row index achieving the max
    def backward(grad, out_t):
        row_ids = np.arange(n_rows).reshape((n_rows,) + (1,) * (vals.ndim - 1))
        is_max = vals == out[segments]
        cand = np.where(is_max, np.broadcast_to(row_ids, vals.shape), n_rows)
        if starts is not None:
            winners = np.minimum.reduceat(cand, starts, axis=0)
        else:
            winners = np.full(out.shape, n_rows, dtype=np.int64)
            np.minimum.at(winners, segments, cand)
        sel = np.broadcast_to(row_ids, vals.shape) == winners[segments]
        return (np.where(sel, grad[segments], 0.0),)
    return Tensor._from_op(out, (values,), backward)
