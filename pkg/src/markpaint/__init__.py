"""Budgeted adversarial perturbations that steer image inpainters.

Core layers: imaging primitives, a differentiable-inpainter contract with a
trainable toy reference model, the perceptual+MSE objective, the signed
gradient attack engines (fixed-mask and mask-agnostic), patch-restricted
quality metrics, transformation defenses, and an experiment harness with a
CLI and an HTTP service on top.
"""

__version__ = "0.1.0"

from .attack import (AttackConfig, AttackResult, EoTConfig, markpaint,
                     markpaint_eot, project_budget)
from .defense import DefenseSpec, apply_defense, default_defense_grid, defense_sweep
from .errors import (CheckpointError, ConfigError, ImageIOError, MarkpaintError,
                     ModelCapabilityError, RegistryError, ValidationError)
from .imaging import (RectSpec, hole_region, linf_distance, load_image,
                      load_mask, mask_coverage, masked_input, random_rect_mask,
                      save_image, save_mask, solid_target)
from .inpaint import (InpainterModel, ToyInpainter, ToyInpainterConfig,
                      TrainingConfig, inpaint, input_gradient, load_model,
                      load_model_spec, register_adapter, registered_adapters,
                      resolve_adapter, save_model, train_toy)
from .loss import FeatureExtractor, LossConfig, get_extractor, mark_loss, mse, perceptual
from .metrics import ComparisonReport, evaluate, hole_patch_loss, l2_metric, psnr, ssim

__all__ = [
    "__version__",
    "AttackConfig", "AttackResult", "EoTConfig", "markpaint", "markpaint_eot",
    "project_budget",
    "DefenseSpec", "apply_defense", "default_defense_grid", "defense_sweep",
    "CheckpointError", "ConfigError", "ImageIOError", "MarkpaintError",
    "ModelCapabilityError", "RegistryError", "ValidationError",
    "RectSpec", "hole_region", "linf_distance", "load_image", "load_mask",
    "mask_coverage", "masked_input", "random_rect_mask", "save_image",
    "save_mask", "solid_target",
    "InpainterModel", "ToyInpainter", "ToyInpainterConfig", "TrainingConfig",
    "inpaint", "input_gradient", "load_model", "load_model_spec",
    "register_adapter", "registered_adapters", "resolve_adapter", "save_model",
    "train_toy",
    "FeatureExtractor", "LossConfig", "get_extractor", "mark_loss", "mse",
    "perceptual",
    "ComparisonReport", "evaluate", "hole_patch_loss", "l2_metric", "psnr",
    "ssim",
]
