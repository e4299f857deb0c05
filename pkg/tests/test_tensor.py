import numpy as np
import pytest

from dualflow.nn.tensor import Tensor, concat_cols, segment_max, segment_sum


def numeric_grad(fn, x, eps=1e-6):
    """Central finite differences of a scalar-valued fn at array x."""
    g = np.zeros_like(x, dtype=float)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy(); xp[idx] += eps
        xm = x.copy(); xm[idx] -= eps
        g[idx] = (fn(xp) - fn(xm)) / (2 * eps)
    return g


def check_grad(fn, x, rel=1e-6):
    t = Tensor(x, requires_grad=True)
    out = fn(t)
    out.backward()
    num = numeric_grad(lambda v: float(fn(Tensor(v)).data), x)
    scale = max(np.abs(num).max(), np.abs(t.grad).max(), 1e-8)
    assert np.abs(t.grad - num).max() / scale < rel, (t.grad, num)


RNG = np.random.default_rng(0)


def test_add_mul_grad():
    check_grad(lambda t: ((t * 3.0 + 1.5) * t).sum(), RNG.standard_normal((4, 3)))


def test_sub_div_grad():
    x = RNG.standard_normal((3, 3)) + 5.0
    check_grad(lambda t: ((t - 2.0) / t).sum(), x)


def test_pow_grad():
    check_grad(lambda t: (t ** 3).sum(), RNG.standard_normal((5,)))


def test_matmul_grad():
    w = RNG.standard_normal((3, 2))
    check_grad(lambda t: (t @ Tensor(w)).sum(), RNG.standard_normal((4, 3)))
    x = RNG.standard_normal((4, 3))
    check_grad(lambda t: (Tensor(x) @ t).sum(), w)


def test_relu_grad():
    x = RNG.standard_normal((6, 4))
    x[np.abs(x) < 0.05] = 0.3   # keep away from the kink
    check_grad(lambda t: t.relu().sum(), x)


def test_leaky_relu_grad():
    x = RNG.standard_normal((6, 4))
    x[np.abs(x) < 0.05] = -0.3
    check_grad(lambda t: t.leaky_relu(0.2).sum(), x)


def test_exp_mean_grad():
    check_grad(lambda t: t.exp().mean(), RNG.standard_normal((3, 5)))


def test_sum_axis_keepdims_grad():
    check_grad(lambda t: (t.sum(axis=0, keepdims=True) * t).sum(),
               RNG.standard_normal((4, 3)))


def test_broadcast_grad():
    b = Tensor(RNG.standard_normal((1, 3)), requires_grad=True)
    x = Tensor(RNG.standard_normal((5, 3)))
    (x + b).sum().backward()
    assert b.grad.shape == (1, 3)
    assert np.allclose(b.grad, 5.0)


def test_take_rows_grad_with_repeats():
    idx = np.array([0, 2, 2, 1, 0, 0])
    x = RNG.standard_normal((3, 2))
    t = Tensor(x, requires_grad=True)
    t.take_rows(idx).sum().backward()
    expected = np.zeros_like(x)
    np.add.at(expected, idx, 1.0)
    assert np.allclose(t.grad, expected)


def test_concat_cols_grad():
    a = Tensor(RNG.standard_normal((4, 2)), requires_grad=True)
    b = Tensor(RNG.standard_normal((4, 3)), requires_grad=True)
    (concat_cols([a, b]) * 2.0).sum().backward()
    assert np.allclose(a.grad, 2.0) and np.allclose(b.grad, 2.0)
    assert a.grad.shape == (4, 2) and b.grad.shape == (4, 3)


def test_segment_sum_forward():
    x = Tensor(np.arange(8, dtype=float).reshape(4, 2))
    seg = np.array([0, 0, 1, 1])
    out = segment_sum(x, seg, 2)
    assert np.array_equal(out.data, [[2, 4], [10, 12]])


def test_segment_sum_unsorted_and_empty():
    x = Tensor(np.ones((3, 1)))
    out = segment_sum(x, np.array([2, 0, 2]), 4)
    assert np.array_equal(out.data, [[1], [0], [2], [0]])


def test_segment_sum_grad():
    seg = np.array([0, 1, 1, 2])
    x = RNG.standard_normal((4, 3))
    w = RNG.standard_normal((3, 3))
    check_grad(lambda t: (segment_sum(t, seg, 3) * Tensor(w)).sum(), x)


def test_segment_max_forward_and_ties():
    x = Tensor(np.array([[1.0], [5.0], [5.0], [2.0]]))
    seg = np.array([0, 0, 0, 1])
    out = segment_max(x, seg, 2)
    assert np.array_equal(out.data, [[5.0], [2.0]])
    out.sum().backward()
    # tie broken toward the lowest row index
    t = Tensor(np.array([[1.0], [5.0], [5.0], [2.0]]), requires_grad=True)
    segment_max(t, seg, 2).sum().backward()
    assert np.array_equal(t.grad, [[0.0], [1.0], [0.0], [1.0]])


def test_segment_max_grad():
    seg = np.array([0, 0, 1, 1, 1])
    x = RNG.standard_normal((5, 4)) * 3   # distinct values, away from ties
    check_grad(lambda t: (segment_max(t, seg, 2) ** 2).sum(), x)


def test_segment_max_empty_segment_raises():
    with pytest.raises(ValueError, match="empty"):
        segment_max(Tensor(np.ones((2, 1))), np.array([0, 2]), 3)


def test_segment_ops_match_naive_random():
    for trial in range(20):
        rng = np.random.default_rng(trial)
        n, f, k = int(rng.integers(1, 30)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
        seg = np.sort(rng.integers(0, k, n)) if trial % 2 else rng.integers(0, k, n)
        x = rng.standard_normal((n, f))
        ref_sum = np.zeros((k, f))
        np.add.at(ref_sum, seg, x)
        assert np.allclose(segment_sum(Tensor(x), seg, k).data, ref_sum)
        if len(set(seg.tolist())) == k:
            ref_max = np.full((k, f), -np.inf)
            np.maximum.at(ref_max, seg, x)
            assert np.allclose(segment_max(Tensor(x), seg, k).data, ref_max)


def test_backward_accumulates_through_diamond():
    # y = x*x + x  ->  dy/dx = 2x + 1
    t = Tensor(np.array([3.0]), requires_grad=True)
    (t * t + t).sum().backward()
    assert np.allclose(t.grad, [7.0])


def test_backward_requires_scalar():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ValueError):
        (t * 2.0).backward()


def test_detach_blocks_gradient():
    t = Tensor(np.ones((3,)), requires_grad=True)
    (t.detach() * t).sum().backward()
    assert np.allclose(t.grad, 1.0)


def test_float64_everywhere():
    t = Tensor(np.ones((2, 2), dtype=np.float32))
    assert t.data.dtype == np.float64
    assert (t * 2).data.dtype == np.float64
