"""Central finite-difference checking of analytic gradients.

Run graphs in float64: with eps around 1e-5 the truncation and roundoff
errors of central differences sit near 1e-10, far below the tolerances
asserted by callers.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .autodiff import Tensor, no_grad

__all__ = ["grad_check", "relative_error"]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(|a|, |n|, floor).

    The floor keeps dead coordinates (true gradient ~0, both estimates
    at roundoff level) from dominating the ratio.
    """
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


def grad_check(fn: Callable[[], Tensor], wrt: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between backprop and central differences.

    ``fn`` rebuilds the graph from the current ``.data`` of the leaf
    tensors in ``wrt`` and returns a scalar. Every coordinate of every
    checked tensor is perturbed by +/- eps.
    """
    for t in wrt:
        t.requires_grad = True
        t.needs_grad = True
        t.zero_grad()
    out = fn()
    if out.data.size != 1:
        raise ValueError("grad_check needs a scalar-valued graph")
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("non-finite forward value")
    out.backward()
    analytic = []
    for t in wrt:
        if t.grad is None:
            analytic.append(np.zeros_like(t.data))
        else:
            analytic.append(t.grad.copy())

    worst = 0.0
    with no_grad():
        for t, a in zip(wrt, analytic):
            flat = t.data.reshape(-1)
            num = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                f_plus = float(fn().data.reshape(()))
                flat[i] = orig - eps
                f_minus = float(fn().data.reshape(()))
                flat[i] = orig
                if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                    raise FloatingPointError("non-finite value during finite differencing")
                num[i] = (f_plus - f_minus) / (2.0 * eps)
            worst = max(worst, relative_error(a.reshape(-1), num))
    return worst
