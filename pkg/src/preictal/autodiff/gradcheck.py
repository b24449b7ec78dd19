"""Finite-difference gradient verification.

Analytic gradients are compared against central differences computed in
float64. The scalar probe loss is sum(f(inputs) * R) for a fixed random R, so
vector-valued ops are exercised through a full vector-Jacobian product.
"""

from __future__ import annotations

import numpy as np

from preictal.autodiff.tensor import Tensor


def gradcheck(fn, inputs: list[np.ndarray], eps: float = 1e-5, rng=None) -> float:
    """Return the maximum relative error between analytic and numerical
    gradients of fn over all elements of all inputs.

    fn maps a list of Tensors to one Tensor (any shape). Inputs should be
    float64 for the comparison to be meaningful at eps ~ 1e-5.
    """
    rng = rng or np.random.default_rng(0)
    inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
    tensors = [Tensor(x.copy(), requires_grad=True) for x in inputs]
    out = fn(tensors)
    probe = rng.standard_normal(out.shape)

    def scalar(arrs: list[np.ndarray]) -> float:
        result = fn([Tensor(a) for a in arrs])
        return float((result.data * probe).sum())

    loss = (out * Tensor(probe)).sum()
    loss.backward()

    worst = 0.0
    for i, x in enumerate(inputs):
        analytic = tensors[i].grad
        if analytic is None:
            analytic = np.zeros_like(x)
        numeric = np.zeros_like(x)
        flat = x.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            step = eps * max(1.0, abs(orig))
            flat[j] = orig + step
            up = scalar(inputs)
            flat[j] = orig - step
            down = scalar(inputs)
            flat[j] = orig
            num_flat[j] = (up - down) / (2.0 * step)
        denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst
