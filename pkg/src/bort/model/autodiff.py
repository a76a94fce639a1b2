"""Minimal reverse-mode tape for dense numpy tensors.

Heavy recurrent pieces (GRU cell, additive attention, masked cross entropy)
are single fused nodes with hand-derived backward rules; the tape stays
short enough that a full training batch fits comfortably in memory.  All
ops follow the dtype of their inputs, so the same graph code runs in
float32 for training and float64 for finite-difference verification.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "parents", "bwd", "needs_grad")

    def __init__(self, data, needs_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.parents: tuple[Tensor, ...] = ()
        self.bwd = None
        self.needs_grad = needs_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def add_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        if self.data.ndim != 0:
            raise ValueError("backward() expects a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen or not node.needs_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node.bwd is not None and node.grad is not None:
                node.bwd(node.grad)
            # free interior activations as soon as their grads have flowed
            if node is not self and node.parents:
                node.grad = None


def _make(data, parents, bwd) -> Tensor:
    if not _grad_enabled or not any(p.needs_grad for p in parents):
        return Tensor(data)
    out = Tensor(data, needs_grad=True)
    out.parents = tuple(p for p in parents if p.needs_grad)
    out.bwd = bwd
    return out


def constant(data, dtype=None) -> Tensor:
    arr = np.asarray(data, dtype=dtype)
    return Tensor(arr)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def bwd(g):
        if a.needs_grad:
            a.add_grad(_unbroadcast(g, a.data.shape))
        if b.needs_grad:
            b.add_grad(_unbroadcast(g, b.data.shape))

    return _make(data, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def bwd(g):
        if a.needs_grad:
            a.add_grad(_unbroadcast(g * b.data, a.data.shape))
        if b.needs_grad:
            b.add_grad(_unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    data = a.data * a.dtype.type(c)

    def bwd(g):
        a.add_grad(g * a.dtype.type(c))

    return _make(data, (a,), bwd)


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def bwd(g):
        a.add_grad(g * (1.0 - data * data))

    return _make(data, (a,), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D @ 2-D."""
    data = a.data @ b.data

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g @ b.data.T)
        if b.needs_grad:
            b.add_grad(a.data.T @ g)

    return _make(data, (a, b), bwd)


def seq_matmul(a: Tensor, b: Tensor) -> Tensor:
    """(B,T,M) @ (M,N) -> (B,T,N)."""
    data = a.data @ b.data

    def bwd(g):
        if a.needs_grad:
            a.add_grad(g @ b.data.T)
        if b.needs_grad:
            b.add_grad(np.einsum("btm,btn->mn", a.data, g))

    return _make(data, (a, b), bwd)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    data = np.concatenate([p.data for p in parts], axis=-1)
    sizes = [p.data.shape[-1] for p in parts]

    def bwd(g):
        offset = 0
        for p, size in zip(parts, sizes):
            if p.needs_grad:
                p.add_grad(g[..., offset:offset + size])
            offset += size

    return _make(data, tuple(parts), bwd)


def stack_steps(steps: list[Tensor]) -> Tensor:
    """Stack T tensors of shape (B, N) into (B, T, N)."""
    data = np.stack([s.data for s in steps], axis=1)

    def bwd(g):
        for t, s in enumerate(steps):
            if s.needs_grad:
                s.add_grad(g[:, t, :])

    return _make(data, tuple(steps), bwd)


def rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: (V, E) indexed by int array of any shape."""
    data = table.data[ids]

    def bwd(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids, g)

    return _make(data, (table,), bwd)


def gru_step(
    x: Tensor, h: Tensor, W: Tensor, U: Tensor, b: Tensor, hb: Tensor,
    step_mask: np.ndarray,
) -> Tensor:
    """One batched GRU update gated row-wise by step_mask (B, 1).

    Rows with mask 0 carry the previous hidden state through unchanged, so
    the final state of a padded sequence equals its last valid state.
    """
    H = h.data.shape[-1]
    gx = x.data @ W.data + b.data
    gh = h.data @ U.data + hb.data
    r = 1.0 / (1.0 + np.exp(-(gx[:, :H] + gh[:, :H])))
    z = 1.0 / (1.0 + np.exp(-(gx[:, H:2 * H] + gh[:, H:2 * H])))
    ghn = gh[:, 2 * H:]
    n = np.tanh(gx[:, 2 * H:] + r * ghn)
    h_cand = (1.0 - z) * n + z * h.data
    data = step_mask * h_cand + (1.0 - step_mask) * h.data

    def bwd(g):
        dcand = g * step_mask
        dh = g * (1.0 - step_mask)
        dz = dcand * (h.data - n)
        dn = dcand * (1.0 - z)
        dh = dh + dcand * z
        dan = dn * (1.0 - n * n)
        dr = dan * ghn
        dar = dr * r * (1.0 - r)
        daz = dz * z * (1.0 - z)
        dgx = np.concatenate([dar, daz, dan], axis=1)
        dgh = np.concatenate([dar, daz, dan * r], axis=1)
        if W.needs_grad:
            W.add_grad(x.data.T @ dgx)
        if b.needs_grad:
            b.add_grad(dgx.sum(axis=0))
        if U.needs_grad:
            U.add_grad(h.data.T @ dgh)
        if hb.needs_grad:
            hb.add_grad(dgh.sum(axis=0))
        if x.needs_grad:
            x.add_grad(dgx @ W.data.T)
        if h.needs_grad:
            h.add_grad(dh + dgh @ U.data.T)

    return _make(data, (x, h, W, U, b, hb), bwd)


def additive_attention(
    h: Tensor, keys: Tensor, memory: Tensor, W1: Tensor, v: Tensor,
    attn_mask: np.ndarray,
) -> Tensor:
    """Context vector from score = v . tanh(W1 h + W2 H), softmax over T.

    keys is the precomputed W2-projection of memory (B, T, A); attn_mask is
    (B, T) with 1 on real positions.  Returns (B, M).
    """
    a1 = h.data @ W1.data
    s = np.tanh(keys.data + a1[:, None, :])
    scores = s @ v.data
    scores = scores + (attn_mask - 1.0) * 1e9
    m = scores.max(axis=1, keepdims=True)
    e = np.exp(scores - m) * attn_mask
    w = e / e.sum(axis=1, keepdims=True)
    data = np.einsum("bt,btm->bm", w, memory.data)

    def bwd(g):
        dw = np.einsum("bm,btm->bt", g, memory.data)
        if memory.needs_grad:
            memory.add_grad(w[:, :, None] * g[:, None, :])
        dscores = (dw - (dw * w).sum(axis=1, keepdims=True)) * w
        if v.needs_grad:
            v.add_grad(np.einsum("bt,bta->a", dscores, s))
        ds = dscores[:, :, None] * v.data
        da = ds * (1.0 - s * s)
        if keys.needs_grad:
            keys.add_grad(da)
        da1 = da.sum(axis=1)
        if W1.needs_grad:
            W1.add_grad(h.data.T @ da1)
        if h.needs_grad:
            h.add_grad(da1 @ W1.data.T)

    return _make(data, (h, keys, memory, W1, v), bwd)


def cross_entropy_sum(logits: Tensor, targets: np.ndarray, loss_mask: np.ndarray) -> Tensor:
    """Summed token NLL over masked positions of (B, L, V) logits.

    Padding rows contribute exactly zero to both the value and the
    gradient.  Divide by the mask sum for a per-token mean.
    """
    x = logits.data
    m = x.max(axis=-1, keepdims=True)
    ex = np.exp(x - m)
    lse = np.log(ex.sum(axis=-1)) + m[..., 0]
    picked = np.take_along_axis(x, targets[..., None], axis=-1)[..., 0]
    data = np.asarray(((lse - picked) * loss_mask).sum(), dtype=x.dtype)

    def bwd(g):
        soft = ex / ex.sum(axis=-1, keepdims=True)
        np.subtract.at(soft, (*np.indices(targets.shape), targets), 1.0)
        logits.add_grad(soft * (loss_mask[..., None] * g))

    return _make(data, (logits,), bwd)
