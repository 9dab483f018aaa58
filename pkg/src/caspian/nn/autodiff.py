"""Reverse-mode autodiff over numpy arrays.

Graphs are built define-by-run: every op returns a new Tensor holding a
closure that routes the upstream gradient to its parents. Calling
``backward()`` on a scalar runs the tape in reverse topological order.
Inside a ``no_grad()`` block no tape is recorded, which keeps inference
allocation-light.
"""

from __future__ import annotations

import contextlib
import threading

import numpy as np

__all__ = ["Tensor", "no_grad", "grad_enabled"]

# Per-thread recording flag: concurrent inference threads entering and
# leaving no_grad() must not disturb a training thread's tape.
_STATE = threading.local()


def grad_enabled() -> bool:
    return getattr(_STATE, "grad_enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable tape recording within the block (thread-local)."""
    previous = grad_enabled()
    _STATE.grad_enabled = False
    try:
        yield
    finally:
        _STATE.grad_enabled = previous


class Tensor:
    """A numpy array plus the backward closure that produced it."""

    __slots__ = ("data", "grad", "requires_grad", "needs_grad", "_parents", "_backward_fn", "name", "_fresh")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward_fn=None, name: str | None = None):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad  # leaf parameter / checked input
        self.grad: np.ndarray | None = None
        self._parents = tuple(parents)
        self._backward_fn = backward_fn
        self.name = name
        # Set by ops under no_grad: the buffer is a private intermediate
        # that downstream ops may overwrite instead of allocating.
        self._fresh = False
        if backward_fn is None:
            self.needs_grad = requires_grad
        else:
            self.needs_grad = any(p.needs_grad for p in self._parents)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, seed: np.ndarray | None = None) -> None:
        """Backpropagate from this tensor (scalar unless a seed is given)."""
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            seed = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen or not node.needs_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.accumulate(np.asarray(seed, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)
                if not node.requires_grad:
                    node.grad = None  # free intermediate grads early

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

