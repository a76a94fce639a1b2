"""Finite-difference helper for op-level gradient tests (float64)."""

import numpy as np

from bort.model.autodiff import Tensor


def numeric_grad(fn, tensors: dict[str, Tensor], eps: float = 1e-6) -> dict[str, np.ndarray]:
    grads = {}
    for name, t in tensors.items():
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(fn().data)
            flat[i] = orig - eps
            lo = float(fn().data)
            flat[i] = orig
            gf[i] = (hi - lo) / (2 * eps)
        grads[name] = g
    return grads


def analytic_grad(fn, tensors: dict[str, Tensor]) -> dict[str, np.ndarray]:
    for t in tensors.values():
        t.grad = None
    out = fn()
    out.backward()
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in tensors.items()
    }


def max_rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(1e-8, np.abs(a) + np.abs(b))
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def check_grads(fn, tensors: dict[str, Tensor], tol: float = 1e-6) -> None:
    ana = analytic_grad(fn, tensors)
    num = numeric_grad(fn, tensors)
    for name in tensors:
        err = max_rel_err(ana[name], num[name])
        assert err < tol, f"{name}: max rel err {err:.3e}"
