"""Reverse-mode autodiff on dense numpy tensors."""

from .checkpoint import load_checkpoint, save_checkpoint
from .functional import (
    add,
    batchnorm2d,
    conv2d,
    dropout,
    global_avgpool,
    linear,
    maxpool2d,
    mse_loss,
    relu,
    reshape,
)
from .tensor import Tensor

__all__ = [
    "Tensor",
    "add", "batchnorm2d", "conv2d", "dropout", "global_avgpool",
    "linear", "maxpool2d", "mse_loss", "relu", "reshape",
    "save_checkpoint", "load_checkpoint",
]
