"""A small reverse-mode differentiation core over float64 numpy arrays.

Only the operations the graph models need are provided. Every op records a
closure that accumulates gradients into its inputs; ``Tensor.backward`` walks
the graph in reverse topological order.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import UsageError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise UsageError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:  # iterative DFS; deep graphs would overflow recursion
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward):
    req = any(p.requires_grad for p in parents)
    return Tensor(data, req, tuple(parents) if req else (), backward if req else None)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))
    return _result(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))
    return _result(a.data * b.data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.shape[-1] != b.data.shape[0]:
        raise UsageError(f"matmul shape mismatch {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)
    return _result(a.data @ b.data, (a, b), backward)


def spmm(s: sp.spmatrix, x) -> Tensor:
    """Constant sparse matrix times tensor."""
    x = as_tensor(x)
    if s.shape[1] != x.shape[0]:
        raise UsageError(f"spmm shape mismatch {s.shape} @ {x.shape}")
    st = s.T.tocsr()

    def backward(g):
        x._accumulate(st @ g)
    return _result(np.asarray(s @ x.data), (x,), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0

    def backward(g):
        x._accumulate(g * mask)
    return _result(x.data * mask, (x,), backward)


def leaky_relu(x, slope=0.2) -> Tensor:
    x = as_tensor(x)
    factor = np.where(x.data > 0, 1.0, slope)

    def backward(g):
        x._accumulate(g * factor)
    return _result(x.data * factor, (x,), backward)


def dropout(x, p: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    x = as_tensor(x)
    if not training or p == 0:
        return x
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return mul(x, keep)


def concat(tensors, axis=1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, sizes, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)
    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def total(x) -> Tensor:
    """Sum of all entries."""
    x = as_tensor(x)

    def backward(g):
        x._accumulate(np.broadcast_to(g, x.shape))
    return _result(np.array(x.data.sum()), (x,), backward)


def head_dot(x, a) -> Tensor:
    """Per-head inner products: ``x`` is ``(rows, heads*d)``, ``a`` is ``(heads, d)``."""
    x, a = as_tensor(x), as_tensor(a)
    heads, d = a.shape
    xr = x.data.reshape(x.shape[0], heads, d)

    def backward(g):
        if x.requires_grad:
            x._accumulate((g[:, :, None] * a.data[None]).reshape(x.shape))
        if a.requires_grad:
            a._accumulate(np.einsum("rh,rhd->hd", g, xr))
    return _result(np.einsum("rhd,hd->rh", xr, a.data), (x, a), backward)


def head_scale(w, x) -> Tensor:
    """Scale each head block of ``x`` (``rows, heads*d``) by ``w`` (``rows, heads``)."""
    w, x = as_tensor(w), as_tensor(x)
    rows, heads = w.shape
    d = x.shape[1] // heads
    xr = x.data.reshape(rows, heads, d)

    def backward(g):
        gr = g.reshape(rows, heads, d)
        if w.requires_grad:
            w._accumulate(np.einsum("rhd,rhd->rh", gr, xr))
        if x.requires_grad:
            x._accumulate((gr * w.data[:, :, None]).reshape(x.shape))
    return _result((xr * w.data[:, :, None]).reshape(x.shape), (w, x), backward)


def segment_softmax(scores, segments: np.ndarray, n_segments: int) -> Tensor:
    """Softmax of each column of ``scores`` within groups of rows sharing a segment id."""
    s = as_tensor(scores)
    data = s.data if s.data.ndim == 2 else s.data[:, None]
    top = np.full((n_segments, data.shape[1]), -np.inf)
    np.maximum.at(top, segments, data)
    e = np.exp(data - top[segments])
    denom = np.zeros((n_segments, data.shape[1]))
    np.add.at(denom, segments, e)
    y = e / denom[segments]

    def backward(g):
        g2 = g if g.ndim == 2 else g[:, None]
        dot = np.zeros((n_segments, data.shape[1]))
        np.add.at(dot, segments, g2 * y)
        out = y * (g2 - dot[segments])
        s._accumulate(out if s.data.ndim == 2 else out[:, 0])
    return _result(y if s.data.ndim == 2 else y[:, 0], (s,), backward)


def softmax(x) -> Tensor:
    """Row-wise softmax."""
    x = as_tensor(x)
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        x._accumulate(y * (g - np.sum(g * y, axis=1, keepdims=True)))
    return _result(y, (x,), backward)


LOG_FLOOR = 1e-12


def cross_entropy(probs, onehot, mask) -> Tensor:
    """Mean negative log-likelihood of ``onehot`` targets over masked rows.

    ``probs`` are post-softmax; the log is floored at ``LOG_FLOOR``.
    """
    y = as_tensor(probs)
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise UsageError("cross-entropy over an empty mask")
    z = np.asarray(onehot, dtype=float) * mask[:, None]
    clipped = np.maximum(y.data, LOG_FLOOR)
    loss = -np.sum(z * np.log(clipped)) / count

    def backward(g):
        y._accumulate(g * np.where(y.data > LOG_FLOOR, -z / clipped, 0.0) / count)
    return _result(np.array(loss), (y,), backward)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)
