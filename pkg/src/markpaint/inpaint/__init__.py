"""Differentiable inpainter contract, reference toy model, and adapters."""

from .model import InpainterModel, inpaint, input_gradient
from .toy import ToyInpainter, ToyInpainterConfig
from .train import TrainingConfig, train_toy
from .checkpoint import load_model, save_model
from .registry import (register_adapter, resolve_adapter, registered_adapters,
                       load_model_spec)

__all__ = [
    "InpainterModel", "inpaint", "input_gradient",
    "ToyInpainter", "ToyInpainterConfig",
    "TrainingConfig", "train_toy",
    "load_model", "save_model",
    "register_adapter", "resolve_adapter", "registered_adapters",
    "load_model_spec",
]
