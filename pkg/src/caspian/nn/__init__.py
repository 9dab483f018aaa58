"""Minimal differentiable layer set sufficient for the flood surrogate CNN.

NHWC float tensors, reverse-mode autodiff, exact parameter-count
formulas, finite-difference gradient checking and a byte-exact
checkpoint store.
"""

from .autodiff import Tensor, no_grad, grad_enabled
from .ops import (
    activation,
    add,
    avg_pool2d,
    channel_sum,
    concat,
    conv2d,
    dense,
    masked_huber_mean,
    max_pool2d,
    mean_over_hw,
    mul,
    pool2d,
    relu,
    reshape,
    sigmoid,
    tanh,
    transposed_conv2d,
)
from .gradcheck import grad_check
from .store import TensorStore, read_store, write_store

__all__ = [
    "Tensor",
    "no_grad",
    "grad_enabled",
    "conv2d",
    "transposed_conv2d",
    "pool2d",
    "max_pool2d",
    "avg_pool2d",
    "dense",
    "activation",
    "relu",
    "tanh",
    "sigmoid",
    "add",
    "mul",
    "concat",
    "reshape",
    "mean_over_hw",
    "channel_sum",
    "masked_huber_mean",
    "grad_check",
    "TensorStore",
    "read_store",
    "write_store",
]
